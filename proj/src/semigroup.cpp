#include "chj/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "chj/errors.hpp"
#include "dp_kernel.hpp"

namespace chj {

namespace {

detail::SweepCtx make_ctx(const ContactSystem& sys, const PeriodicGrid& grid,
                          const DpParams& params, Direction dir) {
  if (params.dt * sys.lambda > 0.5 + 1e-12)
    throw ConfigError("evolve: dt * lambda must be <= 0.5");
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

int step_count(double T, double dt) {
  int steps = static_cast<int>(std::lround(T / dt));
  if (steps < 0 || std::abs(steps * dt - T) > 1e-9)
    throw ConfigError("evolve: T must be a multiple of dt");
  return steps;
}

ValueField direct_evolve(const ContactSystem& sys, const GridFunction& phi, double T,
                         const DpParams& params, Direction dir) {
  detail::SweepCtx ctx = make_ctx(sys, phi.grid, params, dir);
  ValueField field;
  field.grid = phi.grid;
  field.initial = phi;
  field.direction = dir;
  field.c_shift = params.c_shift;
  field.dt = params.dt;
  field.times.push_back(0.0);
  field.slices.push_back(phi.values);
  std::vector<double> prev = phi.values;
  std::vector<double> next(prev.size());
  const int steps = step_count(T, params.dt);
  for (int k = 1; k <= steps; ++k) {
    detail::sweep(ctx, prev, nullptr, next);
    prev = next;
    field.times.push_back(k * params.dt);
    field.slices.push_back(prev);
  }
  return field;
}

}  // namespace

int ValueField::slice_index(double t) const {
  int k = static_cast<int>(std::lround(t / dt));
  if (k < 0 || k >= static_cast<int>(times.size()) || std::abs(times[k] - t) > 1e-9)
    throw ConfigError("ValueField: time is not a stored slice");
  return k;
}

const std::vector<double>& ValueField::slice(double t) const { return slices[slice_index(t)]; }

double ValueField::query(const Point& x, double t) const {
  GridFunction f{grid, slices[slice_index(t)]};
  return interpolate(f, x);
}

GridFunction ValueField::slice_function(int k) const { return GridFunction{grid, slices[k]}; }

ValueField picard_apply(const ContactSystem& sys, const GridFunction& phi, const ValueField& u,
                        const DpParams& params) {
  detail::SweepCtx ctx = make_ctx(sys, phi.grid, params, Direction::forward);
  ValueField out;
  out.grid = phi.grid;
  out.initial = phi;
  out.direction = Direction::forward;
  out.c_shift = params.c_shift;
  out.dt = params.dt;
  out.times = u.times;
  out.slices.resize(u.slices.size());
  out.slices[0] = phi.values;
  std::vector<double> prev = phi.values;
  std::vector<double> next(prev.size());
  for (std::size_t k = 1; k < u.slices.size(); ++k) {
    // L's u-argument frozen at the arrival slice of the input field.
    detail::sweep(ctx, prev, &u.slices[k], next);
    out.slices[k] = next;
    prev = next;
  }
  return out;
}

ValueField backward_evolve(const ContactSystem& sys, const GridFunction& phi, double T,
                           const DpParams& params, EvolveMode mode, PicardStats* stats,
                           double picard_tol) {
  if (mode == EvolveMode::direct) return direct_evolve(sys, phi, T, params, Direction::forward);

  const int steps = step_count(T, params.dt);
  ValueField u;
  u.grid = phi.grid;
  u.initial = phi;
  u.direction = Direction::forward;
  u.c_shift = params.c_shift;
  u.dt = params.dt;
  for (int k = 0; k <= steps; ++k) {
    u.times.push_back(k * params.dt);
    u.slices.push_back(phi.values);
  }
  if (stats) {
    stats->gaps.clear();
    stats->iterations = 0;
  }
  for (int it = 0; it < 200; ++it) {
    ValueField next = picard_apply(sys, phi, u, params);
    double gap = 0;
    for (std::size_t k = 0; k < u.slices.size(); ++k)
      gap = std::max(gap, sup_diff(u.slices[k], next.slices[k]));
    u = std::move(next);
    if (stats) {
      stats->gaps.push_back(gap);
      stats->iterations = it + 1;
    }
    if (gap <= picard_tol) return u;
  }
  throw ConvergenceError("backward_evolve: Picard iteration cap (200) exceeded");
}

ValueField forward_evolve(const ContactSystem& sys, const GridFunction& phi, double T,
                          const DpParams& params) {
  return direct_evolve(sys, phi, T, params, Direction::backward);
}

void evolve_streaming(const ContactSystem& sys, const GridFunction& phi, double T,
                      const DpParams& params, Direction dir,
                      const std::function<bool(int, const std::vector<double>&)>& cb) {
  detail::SweepCtx ctx = make_ctx(sys, phi.grid, params, dir);
  const int steps = step_count(T, params.dt);
  std::vector<double> prev = phi.values;
  std::vector<double> next(prev.size());
  if (!cb(0, prev)) return;
  for (int k = 1; k <= steps; ++k) {
    detail::sweep(ctx, prev, nullptr, next);
    prev.swap(next);
    if (!cb(k, prev)) return;
  }
}

double representation_residual(const ContactSystem& sys, const GridFunction& phi, double t,
                               const DpParams& params) {
  if (t < 10 * params.dt - 1e-12)
    throw ConfigError("representation_residual: t must be >= 10*dt");
  ValueField lhs = backward_evolve(sys, phi, t, params);
  const PeriodicGrid& grid = phi.grid;
  std::vector<double> rep(grid.node_count(), std::numeric_limits<double>::infinity());
  for (int y = 0; y < grid.node_count(); y += 4) {
    ActionField hy = forward_action(sys, grid.node(y), phi.values[y], t, grid, params);
    const std::vector<double>& v = hy.slices.back();
    for (int i = 0; i < grid.node_count(); ++i) rep[i] = std::min(rep[i], v[i]);
  }
  return sup_diff(lhs.slices.back(), rep);
}

double semigroup_residual(const ContactSystem& sys, const GridFunction& phi, double t, double s,
                          const DpParams& params) {
  if (s == 0.0) {
    // T_0 is the identity; both sides are the same sweep.
    ValueField a = backward_evolve(sys, phi, t, params);
    ValueField b = backward_evolve(sys, phi, t, params);
    return sup_diff(a.slices.back(), b.slices.back());
  }
  if (t < 10 * params.dt - 1e-12 || s < 10 * params.dt - 1e-12)
    throw ConfigError("semigroup_residual: t and s must be >= 10*dt (or s == 0)");
  ValueField both = backward_evolve(sys, phi, t + s, params);
  ValueField first = backward_evolve(sys, phi, s, params);
  const PeriodicGrid& grid = phi.grid;
  const std::vector<double>& mid = first.slices.back();
  std::vector<double> composed(grid.node_count(), std::numeric_limits<double>::infinity());
  for (int z = 0; z < grid.node_count(); z += 4) {
    ActionField hz = forward_action(sys, grid.node(z), mid[z], t, grid, params);
    const std::vector<double>& v = hz.slices.back();
    for (int i = 0; i < grid.node_count(); ++i) composed[i] = std::min(composed[i], v[i]);
  }
  return sup_diff(both.slices.back(), composed);
}

bool comparison_check(const ContactSystem& sys, const GridFunction& phi, const GridFunction& psi,
                      double T, const DpParams& params) {
  for (int i = 0; i < phi.grid.node_count(); ++i)
    if (!(psi.values[i] < phi.values[i]))
      throw ConfigError("comparison_check: requires psi < phi pointwise");
  ValueField tphi = backward_evolve(sys, phi, T, params);
  ValueField tpsi = backward_evolve(sys, psi, T, params);
  for (std::size_t k = 0; k < tphi.slices.size(); ++k)
    for (int i = 0; i < phi.grid.node_count(); ++i)
      if (!(tpsi.slices[k][i] < tphi.slices[k][i])) return false;
  return true;
}

namespace {

// Piecewise-linear probe: waypoints at chosen slice indices, linear in
// between (per axis, through the minimal image).
struct Probe {
  std::vector<int> knots;            // ascending slice indices
  std::vector<Point> waypoints;      // same length
  Point at(int k, const PeriodicGrid& grid) const {
    std::size_t seg = 1;
    while (seg < knots.size() && knots[seg] < k) ++seg;
    if (seg >= knots.size()) return waypoints.back();
    int k0 = knots[seg - 1], k1 = knots[seg];
    double s = k1 == k0 ? 0.0 : static_cast<double>(k - k0) / (k1 - k0);
    Point d = wrap_displacement(waypoints[seg], waypoints[seg - 1], grid.dim);
    Point p{waypoints[seg - 1][0] + s * d[0],
            grid.dim == 2 ? waypoints[seg - 1][1] + s * d[1] : 0.0};
    return wrap(p, grid.dim);
  }
};

}  // namespace

VariationalReport variational_solution_residual(const ContactSystem& sys, const ValueField& field,
                                                int probe_curves, std::uint64_t seed) {
  const PeriodicGrid& grid = field.grid;
  const int K = static_cast<int>(field.times.size()) - 1;
  const double dt = field.dt;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  VariationalReport rep;

  for (int pidx = 0; pidx < probe_curves; ++pidx) {
    Probe probe;
    const int terminal = pidx % grid.node_count();
    Point end_point = grid.node(terminal);
    if (pidx % 2 == 0) {
      // Resting probe: parked at its terminal node for the whole horizon.
      probe.knots = {0, K};
      probe.waypoints = {end_point, end_point};
    } else {
      // Moving probe: random waypoints, then parked at the terminal node
      // from a random mid time onward.
      int mid = 1 + static_cast<int>(unit(rng) * (K - 1));
      int third = mid / 2;
      Point w0{unit(rng), grid.dim == 2 ? unit(rng) : 0.0};
      Point w1{unit(rng), grid.dim == 2 ? unit(rng) : 0.0};
      probe.knots = {0, std::max(1, third), mid, K};
      probe.waypoints = {w0, w1, end_point, end_point};
    }

    // Max sub-segment excess of u-increments over the running action
    // integral (max drawup of u_k - integral_k).
    double run_min = std::numeric_limits<double>::infinity();
    double integral = 0;
    Point prev_pos = probe.at(0, grid);
    double prev_u = interpolate(GridFunction{grid, field.slices[0]}, prev_pos);
    for (int k = 0; k <= K; ++k) {
      Point pos = probe.at(k, grid);
      double u = interpolate(GridFunction{grid, field.slices[k]}, pos);
      if (k > 0) {
        Point d = wrap_displacement(pos, prev_pos, grid.dim);
        Point vel{d[0] / dt, grid.dim == 2 ? d[1] / dt : 0.0};
        integral += dt * (sys.L(prev_pos, prev_u, vel) + field.c_shift);
      }
      double drift = u - integral;
      run_min = std::min(run_min, drift);
      rep.ineq_violation = std::max(rep.ineq_violation, drift - run_min);
      prev_pos = pos;
      prev_u = u;
    }
  }

  // Equality along traced minimizers: backtrack the dp argmin from a few
  // terminal nodes and integrate L along the traced curve.
  const int trace_count = std::min(8, grid.node_count());
  detail::SweepCtx ctx{};
  ctx.sys = &sys;
  ctx.dim = grid.dim;
  ctx.n = grid.n;
  ctx.dx = grid.spacing;
  ctx.dt = dt;
  ctx.c_shift = field.c_shift;
  ctx.sign = 1.0;
  ctx.midpoint_L = false;
  ctx.window = std::clamp(static_cast<int>(std::ceil(0.05 / grid.spacing)) + 2, 2,
                          grid.n / 2 - 2);
  ctx.fp_cap = 100;
  for (int tr = 0; tr < trace_count; ++tr) {
    if (grid.dim != 1) break;  // tracing implemented on the 1-D grid
    int i_end = tr * grid.node_count() / trace_count;
    std::vector<double> ys(K + 1);
    ys[K] = static_cast<double>(i_end);
    for (int k = K; k >= 1; --k) {
      const std::vector<double>& prev = field.slices[k - 1];
      double target_u = detail::pl_read_1d(field.slices[k], grid.n, ys[k]);
      // argmin over y of PL(prev)(y) + dt*L(y, target_u, (x-y)/dt)
      double best = std::numeric_limits<double>::infinity();
      double best_y = ys[k];
      int base = static_cast<int>(std::lround(ys[k]));
      for (int o = -ctx.window; o <= ctx.window; ++o) {
        double yy = base + o;
        double disp = (ys[k] - yy) * ctx.dx;
        Point vel{disp / dt, 0};
        double y_wrapped = (yy - std::floor(yy / ctx.n) * ctx.n) * ctx.dx;
        double v = detail::pl_read_1d(prev, grid.n, yy) +
                   dt * (sys.L(Point{y_wrapped, 0}, target_u, vel) + field.c_shift);
        if (v < best) {
          best = v;
          best_y = yy;
        }
      }
      // golden refinement over the two adjacent cells
      constexpr double kPhi = 0.6180339887498949;
      for (int cell = 0; cell < 2; ++cell) {
        double a = best_y - 1.0 + cell;
        double b = best_y + cell;
        double c1 = b - kPhi * (b - a), c2 = a + kPhi * (b - a);
        auto eval = [&](double yy) {
          double disp = (ys[k] - yy) * ctx.dx;
          Point vel{disp / dt, 0};
          double y_wrapped = (yy - std::floor(yy / ctx.n) * ctx.n) * ctx.dx;
          return detail::pl_read_1d(prev, grid.n, yy) +
                 dt * (sys.L(Point{y_wrapped, 0}, target_u, vel) + field.c_shift);
        };
        double f1 = eval(c1), f2 = eval(c2);
        for (int it = 0; it < detail::kGoldenIters; ++it) {
          if (f1 < f2) {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - kPhi * (b - a);
            f1 = eval(c1);
          } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + kPhi * (b - a);
            f2 = eval(c2);
          }
        }
        double yb = f1 < f2 ? c1 : c2;
        double fb = std::min(f1, f2);
        if (fb < best) {
          best = fb;
          best_y = yb;
        }
      }
      ys[k - 1] = best_y;
    }
    // integrate L along the traced curve with the field's own values
    double integral = 0;
    for (int k = 0; k < K; ++k) {
      double y0 = ys[k], y1 = ys[k + 1];
      double u_here = detail::pl_read_1d(field.slices[k], grid.n, y0);
      double disp = (y1 - y0) * ctx.dx;
      Point vel{disp / dt, 0};
      double y_wrapped = (y0 - std::floor(y0 / ctx.n) * ctx.n) * ctx.dx;
      integral += dt * (sys.L(Point{y_wrapped, 0}, u_here, vel) + field.c_shift);
    }
    double u_end = field.slices[K][i_end];
    double u_start = detail::pl_read_1d(field.slices[0], grid.n, ys[0]);
    rep.equality_gap = std::max(rep.equality_gap, std::abs(u_end - u_start - integral));
  }
  return rep;
}

std::vector<char> kink_mask(const std::vector<double>& slice, const PeriodicGrid& grid) {
  const int count = grid.node_count();
  std::vector<double> d2(count, 0.0);
  double range_lo = slice[0], range_hi = slice[0];
  for (double v : slice) {
    range_lo = std::min(range_lo, v);
    range_hi = std::max(range_hi, v);
  }
  if (grid.dim == 1) {
    for (int i = 0; i < count; ++i) {
      int ip = i + 1 == count ? 0 : i + 1;
      int im = i == 0 ? count - 1 : i - 1;
      d2[i] = std::abs(slice[ip] - 2 * slice[i] + slice[im]);
    }
  } else {
    const int n = grid.n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        int idx = i * n + j;
        double dxx = std::abs(slice[grid.index(i + 1, j)] - 2 * slice[idx] +
                              slice[grid.index(i - 1, j)]);
        double dyy = std::abs(slice[grid.index(i, j + 1)] - 2 * slice[idx] +
                              slice[grid.index(i, j - 1)]);
        d2[idx] = std::max(dxx, dyy);
      }
  }
  std::vector<double> sorted = d2;
  std::nth_element(sorted.begin(), sorted.begin() + count / 2, sorted.end());
  double median = sorted[count / 2];
  double floor_abs = 1e-7 * (1.0 + range_hi - range_lo);
  double threshold = std::max(10.0 * median, floor_abs);
  std::vector<char> mask(count, 0);
  for (int i = 0; i < count; ++i) mask[i] = d2[i] > threshold ? 1 : 0;
  return mask;
}

ViscosityReport viscosity_residual(const ContactSystem& sys, const ValueField& field, double c) {
  const PeriodicGrid& grid = field.grid;
  const int K = static_cast<int>(field.times.size()) - 1;
  const double dt = field.dt;
  ViscosityReport rep;
  if (K < 2) return rep;
  const int stride = std::max(1, K / 16);
  for (int k = 1; k + 1 <= K; k += stride) {
    if (k + 1 > K) break;
    const std::vector<double>& wm = field.slices[k - 1];
    const std::vector<double>& w0 = field.slices[k];
    const std::vector<double>& wp = field.slices[k + 1];
    std::vector<char> kinks = kink_mask(w0, grid);
    // widen the exclusion to immediate neighbors (central stencils touch them)
    std::vector<char> excluded = kinks;
    if (grid.dim == 1) {
      for (int i = 0; i < grid.n; ++i)
        if (kinks[i]) {
          excluded[(i + 1) % grid.n] = 1;
          excluded[(i + grid.n - 1) % grid.n] = 1;
        }
    } else {
      for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j)
          if (kinks[grid.index(i, j)])
            for (int di = -1; di <= 1; ++di)
              for (int dj = -1; dj <= 1; ++dj) excluded[grid.index(i + di, j + dj)] = 1;
    }
    for (int i = 0; i < grid.node_count(); ++i) {
      if (kinks[i]) ++rep.kink_count;
      if (excluded[i]) continue;
      double wt = (wp[i] - wm[i]) / (2 * dt);
      Point gradient{0, 0};
      if (grid.dim == 1) {
        int ip = (i + 1) % grid.n, im = (i + grid.n - 1) % grid.n;
        gradient[0] = (w0[ip] - w0[im]) / (2 * grid.spacing);
      } else {
        auto ij = grid.axes(i);
        gradient[0] = (w0[grid.index(ij[0] + 1, ij[1])] - w0[grid.index(ij[0] - 1, ij[1])]) /
                      (2 * grid.spacing);
        gradient[1] = (w0[grid.index(ij[0], ij[1] + 1)] - w0[grid.index(ij[0], ij[1] - 1)]) /
                      (2 * grid.spacing);
      }
      double res = std::abs(wt + sys.H(grid.node(i), w0[i], gradient) - c);
      rep.max_residual = std::max(rep.max_residual, res);
      ++rep.checked_points;
    }
  }
  return rep;
}

}  // namespace chj
