#include "chj/action.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "chj/errors.hpp"
#include "chj/parallel.hpp"
#include "dp_kernel.hpp"

namespace chj {

namespace {

using detail::kSeedPenalty;

detail::SweepCtx make_ctx(const ContactSystem& sys, const PeriodicGrid& grid,
                          const DpParams& params, Direction dir) {
  if (params.dt * sys.lambda > 0.5 + 1e-12)
    throw ConfigError("dp: dt * lambda must be <= 0.5 for the implicit contraction");
  detail::SweepCtx ctx;
  ctx.sys = &sys;
  ctx.dim = grid.dim;
  ctx.n = grid.n;
  ctx.dx = grid.spacing;
  ctx.dt = params.dt;
  ctx.c_shift = params.c_shift;
  ctx.sign = dir == Direction::forward ? 1.0 : -1.0;
  ctx.midpoint_L = params.midpoint_L;
  int w = static_cast<int>(std::ceil(params.r_search / grid.spacing));
  ctx.window = std::clamp(w, 1, grid.n / 2 - 2);
  ctx.fp_cap = params.fixed_point_cap;
  return ctx;
}

// Action along the straight segment between the anchor and a node over time
// span t, integrating du/ds = L(gamma(s), u, v) + c with RK4. Used as the
// short-time layer where the point anchor is sharper than the grid.
double straight_line_action(const ContactSystem& sys, const Point& anchor, double u0,
                            const Point& x, double t, double c_shift, Direction dir,
                            int substeps) {
  const int dim = sys.dim;
  Point vel, start;
  if (dir == Direction::forward) {
    // gamma(0) = anchor, gamma(t) = x, u(0) = u0; return u(t).
    vel = wrap_displacement(x, anchor, dim);
    start = anchor;
  } else {
    // gamma(0) = x, gamma(t) = anchor, u(t) = u0; return u(0).
    vel = wrap_displacement(anchor, x, dim);
    start = x;
  }
  vel[0] /= t;
  vel[1] /= t;
  auto rhs = [&](double s, double u) {
    Point pos{start[0] + s * vel[0], dim == 2 ? start[1] + s * vel[1] : 0.0};
    pos = wrap(pos, dim);
    return sys.L(pos, u, vel) + c_shift;
  };
  double h = t / substeps;
  double u = u0;
  if (dir == Direction::forward) {
    double s = 0;
    for (int k = 0; k < substeps; ++k) {
      double k1 = rhs(s, u);
      double k2 = rhs(s + 0.5 * h, u + 0.5 * h * k1);
      double k3 = rhs(s + 0.5 * h, u + 0.5 * h * k2);
      double k4 = rhs(s + h, u + h * k3);
      u += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      s += h;
    }
  } else {
    double s = t;
    for (int k = 0; k < substeps; ++k) {
      double k1 = rhs(s, u);
      double k2 = rhs(s - 0.5 * h, u - 0.5 * h * k1);
      double k3 = rhs(s - 0.5 * h, u - 0.5 * h * k2);
      double k4 = rhs(s - h, u - h * k3);
      u -= h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      s -= h;
    }
  }
  return u;
}

ActionField build_action(const ContactSystem& sys, const Point& x0, double u0, double t,
                         const PeriodicGrid& grid, const DpParams& params, Direction dir) {
  if (!(t >= params.dt - 1e-12)) throw ConfigError("action: need t >= dt");
  detail::SweepCtx ctx = make_ctx(sys, grid, params, dir);
  const int steps = static_cast<int>(std::lround(t / params.dt));
  const double sgn = dir == Direction::forward ? 1.0 : -1.0;

  ActionField field;
  field.grid = grid;
  field.anchor_u = u0;
  field.direction = dir;
  field.params = params;
  const int i0 = grid.nearest_node(x0);
  field.anchor_x = grid.node(i0);

  std::vector<double> prev(grid.node_count(), u0 + sgn * kSeedPenalty);
  prev[i0] = u0;
  field.times.push_back(0.0);
  field.slices.push_back(prev);

  const int k_boot = std::min<int>(std::lround(params.boot_time / params.dt), steps);
  std::vector<double> next(grid.node_count());
  std::vector<double> boot(grid.node_count());
  for (int k = 1; k <= steps; ++k) {
    detail::sweep(ctx, prev, nullptr, next);
    if (k <= k_boot) {
      const double tk = k * params.dt;
      const int substeps = std::max(2, (k + 3) / 4);
      parallel_for(grid.node_count(), [&](int i) {
        boot[i] = straight_line_action(sys, field.anchor_x, u0, grid.node(i), tk,
                                       params.c_shift, dir, substeps);
      });
      for (int i = 0; i < grid.node_count(); ++i)
        next[i] = sgn > 0 ? std::min(next[i], boot[i]) : std::max(next[i], boot[i]);
    }
    prev = next;
    field.times.push_back(k * params.dt);
    field.slices.push_back(prev);
  }
  return field;
}

}  // namespace

DpParams make_dp_params(const ContactSystem& sys, const PeriodicGrid& grid, double dt,
                        const Box& box) {
  AprioriBounds ab = apriori_bounds(sys, box.a, box.b, box.delta, box.T);
  DpParams params;
  params.dt = dt;
  double boot_speed = torus_diameter(grid.dim) / std::max(1e-6, params.boot_time);
  double speed = std::max({ab.Q, 2 * ab.k, boot_speed});
  params.r_search = speed * dt + 2 * grid.spacing;
  return params;
}

GridFunction dp_step(const ContactSystem& sys, const GridFunction& prev, const DpParams& params,
                     Direction dir) {
  detail::SweepCtx ctx = make_ctx(sys, prev.grid, params, dir);
  GridFunction out{prev.grid, std::vector<double>(prev.grid.node_count())};
  detail::sweep(ctx, prev.values, nullptr, out.values);
  return out;
}

int ActionField::slice_index(double t) const {
  double dt = params.dt;
  int k = static_cast<int>(std::lround(t / dt));
  if (k < 0 || k >= static_cast<int>(times.size()) || std::abs(times[k] - t) > 1e-9)
    throw ConfigError("ActionField: time is not a stored slice");
  return k;
}

const std::vector<double>& ActionField::slice(double t) const { return slices[slice_index(t)]; }

double ActionField::query(const Point& x, double t) const {
  GridFunction f{grid, slices[slice_index(t)]};
  return interpolate(f, x);
}

GridFunction ActionField::slice_function(int k) const { return GridFunction{grid, slices[k]}; }

ActionField forward_action(const ContactSystem& sys, const Point& x0, double u0, double t,
                           const PeriodicGrid& grid, const DpParams& params) {
  return build_action(sys, x0, u0, t, grid, params, Direction::forward);
}

ActionField backward_action(const ContactSystem& sys, const Point& x0, double u0, double t,
                            const PeriodicGrid& grid, const DpParams& params) {
  return build_action(sys, x0, u0, t, grid, params, Direction::backward);
}

double markov_residual(const ContactSystem& sys, const ActionField& field, double t, double s) {
  if (field.direction != Direction::forward)
    throw ConfigError("markov_residual: forward fields only");
  const DpParams& params = field.params;
  const double dt = params.dt;
  const int kt = field.slice_index(t);
  const int kts = field.slice_index(t + s);
  const PeriodicGrid& grid = field.grid;

  if (s <= 1.5 * dt) {
    // One-step case: the Markov identity reduces to the sweep definition, so
    // recompute the slice exactly as the sweep produced it.
    detail::SweepCtx ctx = make_ctx(sys, grid, params, Direction::forward);
    std::vector<double> next(grid.node_count());
    detail::sweep(ctx, field.slices[kt], nullptr, next);
    const int k_boot = std::min<int>(std::lround(params.boot_time / dt),
                                     static_cast<int>(field.times.size()) - 1);
    if (kt + 1 <= k_boot) {
      const double tk = (kt + 1) * dt;
      const int substeps = std::max(2, (kt + 4) / 4);
      for (int i = 0; i < grid.node_count(); ++i) {
        double bv = straight_line_action(sys, field.anchor_x, field.anchor_u, grid.node(i), tk,
                                         params.c_shift, Direction::forward, substeps);
        next[i] = std::min(next[i], bv);
      }
    }
    return sup_diff(field.slices[kts], next);
  }

  if (t < 10 * dt - 1e-12 || s < 10 * dt - 1e-12)
    throw ConfigError("markov_residual: t and s must be >= 10*dt");

  const std::vector<double>& at_t = field.slices[kt];
  std::vector<double> inner_min(grid.node_count(), std::numeric_limits<double>::infinity());
  for (int y = 0; y < grid.node_count(); y += 4) {
    ActionField inner = forward_action(sys, grid.node(y), at_t[y], s, grid, params);
    const std::vector<double>& v = inner.slices.back();
    for (int i = 0; i < grid.node_count(); ++i) inner_min[i] = std::min(inner_min[i], v[i]);
  }
  return sup_diff(field.slices[kts], inner_min);
}

namespace {

// Sampled extrema of L(x,0,v) used by the reversibility bracket.
void sample_lagrangian_range(const ContactSystem& sys, double speed_cap, double* inf_all,
                             double* sup_cap) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const int nx = 64, nv = 65;
  double vmax = std::max(4.0 * speed_cap, 16.0);
  for (int ix = 0; ix < nx; ++ix) {
    Point x{ix / static_cast<double>(nx), 0.0};
    for (int iv = 0; iv < nv; ++iv) {
      double v = -vmax + 2 * vmax * iv / (nv - 1);
      Point vv{v, sys.dim == 2 ? 0.0 : 0.0};
      double l = sys.L(x, 0.0, vv);
      lo = std::min(lo, l);
      if (std::abs(v) <= speed_cap + 1e-12) hi = std::max(hi, l);
    }
  }
  *inf_all = lo;
  *sup_cap = hi;
}

}  // namespace

double solve_initial_value(const ContactSystem& sys, const Point& x0, const Point& x, double t,
                           double target_u, const PeriodicGrid& grid, const DpParams& params) {
  if (t < 10 * params.dt - 1e-12)
    throw ConfigError("solve_initial_value: t must be >= 10*dt");
  auto h_of = [&](double u0) {
    return forward_action(sys, x0, u0, t, grid, params).query(x, t);
  };

  double d1, d2;
  sample_lagrangian_range(sys, torus_diameter(sys.dim) / t, &d1, &d2);
  double lam = sys.lambda;
  double gexp = lam < 1e-12 ? t : std::expm1(lam * t) / lam;
  double elt = std::exp(lam * t);
  double half_width =
      (std::abs(target_u) + 1.0) * (elt - 1.0) + (std::abs(d1) + std::abs(d2)) * gexp + 0.5;

  double lo = target_u - half_width;
  double hi = target_u + half_width;
  int doublings = 0;
  while (h_of(lo) > target_u) {
    half_width *= 2;
    lo = target_u - half_width;
    if (++doublings > 60)
      throw ConvergenceError("solve_initial_value: bracket expansion exceeded 60 doublings");
  }
  while (h_of(hi) < target_u) {
    half_width *= 2;
    hi = target_u + half_width;
    if (++doublings > 60)
      throw ConvergenceError("solve_initial_value: bracket expansion exceeded 60 doublings");
  }
  // Monotone bisection (strictly increasing in u0 by Monotonicity I).
  while (hi - lo > 2e-7) {
    double mid = 0.5 * (lo + hi);
    if (h_of(mid) < target_u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double duality_roundtrip(const ContactSystem& sys, const Point& x0, double u0, const Point& x,
                         double t, const PeriodicGrid& grid, const DpParams& params) {
  if (t < 10 * params.dt - 1e-12)
    throw ConfigError("duality_roundtrip: t must be >= 10*dt");
  double u = forward_action(sys, x0, u0, t, grid, params).query(x, t);
  double back = backward_action(sys, x, u, t, grid, params).query(x0, t);
  return std::abs(back - u0);
}

double c_shift_bound_check(const ContactSystem& sys, const Point& x0, double u0, double c1,
                           double c2, const Box& box, const PeriodicGrid& grid,
                           const DpParams& params, int samples, std::uint64_t seed) {
  if (c1 == c2) throw ConfigError("c_shift_bound_check: c1 and c2 must differ");
  DpParams p1 = params, p2 = params;
  p1.c_shift = c1;
  p2.c_shift = c2;
  ActionField f1 = forward_action(sys, x0, u0, box.T, grid, p1);
  ActionField f2 = forward_action(sys, x0, u0, box.T, grid, p2);

  std::mt19937_64 rng(seed);
  const int steps = static_cast<int>(f1.times.size()) - 1;
  const int k_min = std::max(10, static_cast<int>(std::ceil(box.delta / params.dt)));
  std::uniform_int_distribution<int> pick_k(k_min, steps);
  std::uniform_int_distribution<int> pick_i(0, grid.node_count() - 1);
  double worst = 0;
  for (int s = 0; s < samples; ++s) {
    int k = pick_k(rng);
    int i = pick_i(rng);
    double tt = f1.times[k];
    double gap = std::abs(f1.slices[k][i] - f2.slices[k][i]);
    double bound = std::exp(sys.lambda * tt) * tt * std::abs(c1 - c2);
    worst = std::max(worst, gap / bound);
  }
  return worst;
}

}  // namespace chj
