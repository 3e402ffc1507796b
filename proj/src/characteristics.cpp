#include "chj/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chj/errors.hpp"

namespace chj {

namespace {

constexpr double kBlowup = 1e8;

bool state_finite(const ContactState& s, int dim) {
  bool ok = std::isfinite(s.x[0]) && std::isfinite(s.u) && std::isfinite(s.p[0]) &&
            std::abs(s.u) < kBlowup && std::abs(s.p[0]) < kBlowup;
  if (dim == 2)
    ok = ok && std::isfinite(s.x[1]) && std::isfinite(s.p[1]) && std::abs(s.p[1]) < kBlowup;
  return ok;
}

ContactState axpy(const ContactState& s, double h, const StateDeriv& d, int dim) {
  ContactState out = s;
  out.x[0] += h * d.dx[0];
  out.u += h * d.du;
  out.p[0] += h * d.dp[0];
  if (dim == 2) {
    out.x[1] += h * d.dx[1];
    out.p[1] += h * d.dp[1];
  }
  return out;
}

}  // namespace

StateDeriv vector_field(const ContactSystem& sys, const ContactState& s) {
  Point hp = sys.H_p(s.x, s.u, s.p);
  Point hx = sys.H_x(s.x, s.u, s.p);
  double hu = sys.H_u(s.x, s.u, s.p);
  double h = sys.H(s.x, s.u, s.p);
  double dot = s.p[0] * hp[0] + (sys.dim == 2 ? s.p[1] * hp[1] : 0.0);
  StateDeriv d;
  d.dx = hp;
  d.du = dot - h;
  d.dp = {-hx[0] - hu * s.p[0], sys.dim == 2 ? -hx[1] - hu * s.p[1] : 0.0};
  return d;
}

double Trajectory::energy(const ContactSystem& sys, int k) const {
  const ContactState& s = states[k];
  return sys.H(s.x, s.u, s.p);
}

Trajectory flow(const ContactSystem& sys, const ContactState& s0, double t, double dt) {
  if (!(dt > 0) || !(t > 0) || dt > t + 1e-15)
    throw ConfigError("flow: need 0 < dt <= t");
  if (dt * sys.lambda >= 0.1)
    throw ConfigError("flow: dt * lambda must stay below 0.1");
  int steps = static_cast<int>(std::lround(t / dt));
  if (steps < 1) steps = 1;
  double h = t / steps;

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  ContactState s = s0;
  s.x = wrap(s.x, sys.dim);
  traj.times.push_back(0.0);
  traj.states.push_back(s);
  for (int k = 0; k < steps; ++k) {
    StateDeriv k1 = vector_field(sys, s);
    StateDeriv k2 = vector_field(sys, axpy(s, 0.5 * h, k1, sys.dim));
    StateDeriv k3 = vector_field(sys, axpy(s, 0.5 * h, k2, sys.dim));
    StateDeriv k4 = vector_field(sys, axpy(s, h, k3, sys.dim));
    StateDeriv sum;
    sum.dx = {(k1.dx[0] + 2 * k2.dx[0] + 2 * k3.dx[0] + k4.dx[0]) / 6.0,
              (k1.dx[1] + 2 * k2.dx[1] + 2 * k3.dx[1] + k4.dx[1]) / 6.0};
    sum.du = (k1.du + 2 * k2.du + 2 * k3.du + k4.du) / 6.0;
    sum.dp = {(k1.dp[0] + 2 * k2.dp[0] + 2 * k3.dp[0] + k4.dp[0]) / 6.0,
              (k1.dp[1] + 2 * k2.dp[1] + 2 * k3.dp[1] + k4.dp[1]) / 6.0};
    s = axpy(s, h, sum, sys.dim);
    s.x = wrap(s.x, sys.dim);
    if (!state_finite(s, sys.dim))
      throw BlowupError("flow: state escaped finite range", (k + 1) * h);
    traj.times.push_back((k + 1) * h);
    traj.states.push_back(s);
  }
  return traj;
}

double energy_drift_residual(const ContactSystem& sys, const Trajectory& traj) {
  if (traj.states.size() < 3)
    throw ConfigError("energy_drift_residual: trajectory too short (< 3 samples)");
  double worst = 0;
  for (std::size_t k = 1; k + 1 < traj.states.size(); ++k) {
    double dt_l = traj.times[k] - traj.times[k - 1];
    double dt_r = traj.times[k + 1] - traj.times[k];
    double dH = (traj.energy(sys, k + 1) - traj.energy(sys, k - 1)) / (dt_l + dt_r);
    const ContactState& s = traj.states[k];
    double law = dH + sys.H(s.x, s.u, s.p) * sys.H_u(s.x, s.u, s.p);
    worst = std::max(worst, std::abs(law));
  }
  return worst;
}

namespace {

struct Hit {
  Point p0;
  double u_end;
  double err;
  Trajectory traj;
};

double terminal_error_1d(const ContactSystem& sys, const Point& x0, double u0, double p0,
                         const Point& target, double t, double dt, double* u_end,
                         Trajectory* out_traj) {
  ContactState s0{x0, u0, {p0, 0}};
  Trajectory traj = flow(sys, s0, t, dt);
  const ContactState& end = traj.states.back();
  double signed_err = wrap_displacement(end.x, target, 1)[0];
  if (u_end) *u_end = end.u;
  if (out_traj) *out_traj = std::move(traj);
  return signed_err;
}

// Nelder-Mead on f: R^2 -> R (terminal position error squared), for the 2-D
// shooting refinement.
Point nelder_mead_2d(const std::function<double(const Point&)>& f, Point start, double scale,
                     int max_iter, double ftol) {
  std::array<Point, 3> simplex{start, Point{start[0] + scale, start[1]},
                               Point{start[0], start[1] + scale}};
  std::array<double, 3> fv{f(simplex[0]), f(simplex[1]), f(simplex[2])};
  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 3> ord{0, 1, 2};
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    if (fv[ord[0]] < ftol) break;
    Point best = simplex[ord[0]], mid = simplex[ord[1]], worst = simplex[ord[2]];
    Point centroid{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
    auto blend = [&](double alpha) {
      return Point{centroid[0] + alpha * (centroid[0] - worst[0]),
                   centroid[1] + alpha * (centroid[1] - worst[1])};
    };
    Point refl = blend(1.0);
    double frefl = f(refl);
    Point replace = refl;
    double freplace = frefl;
    if (frefl < fv[ord[0]]) {
      Point expa = blend(2.0);
      double fexpa = f(expa);
      if (fexpa < frefl) {
        replace = expa;
        freplace = fexpa;
      }
    } else if (frefl >= fv[ord[1]]) {
      Point contr = blend(-0.5);
      double fcontr = f(contr);
      if (fcontr < fv[ord[2]]) {
        replace = contr;
        freplace = fcontr;
      } else {
        for (int i : {ord[1], ord[2]}) {
          simplex[i] = {0.5 * (simplex[i][0] + best[0]), 0.5 * (simplex[i][1] + best[1])};
          fv[i] = f(simplex[i]);
        }
        continue;
      }
    }
    simplex[ord[2]] = replace;
    fv[ord[2]] = freplace;
  }
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (fv[i] < fv[best]) best = i;
  return simplex[best];
}

}  // namespace

ShootResult shoot_minimizer(const ContactSystem& sys, const Point& x0, double u0,
                            const Point& x, double t, const ShootParams& params) {
  if (!(t >= 1e-3)) throw ConfigError("shoot_minimizer: t below the short-time floor 1e-3");
  double radius = params.radius;
  if (radius <= 0) {
    double lo = std::min(u0, -std::abs(u0)) - 1.0;
    double hi = std::max(u0, std::abs(u0)) + 1.0;
    AprioriBounds bounds = apriori_bounds(sys, lo, hi, std::min(t, 0.5), std::max(t, 1.0));
    radius = std::max(bounds.Q, 2 * bounds.k);
  }
  double tol = params.shoot_tol > 0 ? params.shoot_tol : 1e-2;

  std::vector<Hit> hits;
  if (sys.dim == 1) {
    int m = std::max(5, params.multistart);
    std::vector<double> seeds(m), errs(m), uends(m);
    for (int i = 0; i < m; ++i) {
      seeds[i] = -radius + 2.0 * radius * i / (m - 1);
      errs[i] = terminal_error_1d(sys, x0, u0, seeds[i], x, t, params.dt, &uends[i], nullptr);
    }
    auto add_hit = [&](double p0) {
      Hit h;
      h.p0 = {p0, 0};
      Trajectory traj;
      double err = terminal_error_1d(sys, x0, u0, p0, x, t, params.dt, &h.u_end, &traj);
      h.err = std::abs(err);
      h.traj = std::move(traj);
      if (h.err <= tol) hits.push_back(std::move(h));
    };
    for (int i = 0; i + 1 < m; ++i) {
      double e0 = errs[i], e1 = errs[i + 1];
      // A sign change of the wrapped error between nearby seeds brackets a
      // root as long as the error did not jump across the wrap seam.
      if (std::abs(e0 - e1) < 0.4 && e0 * e1 <= 0) {
        double lo = seeds[i], hi = seeds[i + 1];
        double flo = e0;
        for (int it = 0; it < 60 && hi - lo > 1e-12 * (1 + std::abs(lo)); ++it) {
          double mid = 0.5 * (lo + hi);
          double fm = terminal_error_1d(sys, x0, u0, mid, x, t, params.dt, nullptr, nullptr);
          if ((fm <= 0) == (flo <= 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        add_hit(0.5 * (lo + hi));
      } else if (std::abs(e0) <= tol && (i == 0 || std::abs(errs[i - 1]) > std::abs(e0))) {
        add_hit(seeds[i]);
      }
    }
  } else {
    int per_ring = 8;
    int rings = std::max(3, params.multistart / per_ring);
    auto f = [&](const Point& p0) {
      ContactState s0{x0, u0, p0};
      Trajectory traj = flow(sys, s0, t, params.dt);
      double d = periodic_distance(traj.states.back().x, x, 2);
      return d * d;
    };
    for (int r = 0; r <= rings; ++r) {
      double rad = radius * r / rings;
      int count = r == 0 ? 1 : per_ring;
      for (int a = 0; a < count; ++a) {
        double ang = 2 * M_PI * a / count;
        Point seed{rad * std::cos(ang), rad * std::sin(ang)};
        Point p0 = nelder_mead_2d(f, seed, std::max(0.05, radius * 0.02), 200, tol * tol * 1e-4);
        ContactState s0{x0, u0, p0};
        Trajectory traj = flow(sys, s0, t, params.dt);
        double err = periodic_distance(traj.states.back().x, x, 2);
        if (err <= tol) {
          bool dup = false;
          for (const Hit& h : hits)
            if (std::hypot(h.p0[0] - p0[0], h.p0[1] - p0[1]) < 1e-6) dup = true;
          if (!dup)
            hits.push_back(Hit{p0, traj.states.back().u, err, std::move(traj)});
        }
      }
    }
  }

  if (hits.empty())
    throw ShootingError("shoot_minimizer: no seed hit the target within tolerance");

  // Smallest terminal u wins; ties broken by smaller |p0|.
  auto p0_norm = [&](const Hit& h) {
    return std::hypot(h.p0[0], sys.dim == 2 ? h.p0[1] : 0.0);
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < hits.size(); ++i) {
    if (hits[i].u_end < hits[best].u_end - 1e-12 ||
        (std::abs(hits[i].u_end - hits[best].u_end) <= 1e-12 &&
         p0_norm(hits[i]) < p0_norm(hits[best])))
      best = i;
  }
  ShootResult out;
  out.u_end = hits[best].u_end;
  out.p0 = hits[best].p0;
  out.trajectory = std::move(hits[best].traj);
  for (const Hit& h : hits) out.branches.push_back(ShootBranch{h.p0, h.u_end, h.err});
  return out;
}

namespace {

// (e^{lam T} - 1)/lam with the linear-in-T limit at lam = 0.
double expm1_over_lambda(double lam, double T) {
  if (lam < 1e-12) return T;
  return std::expm1(lam * T) / lam;
}

}  // namespace

AprioriBounds apriori_bounds(const ContactSystem& sys, double a, double b, double delta,
                             double T) {
  if (!(a < b) || !(0 < delta) || !(delta < T))
    throw ConfigError("apriori_bounds: need a < b and 0 < delta < T");
  if (sys.lambda < 0) throw ConfigError("apriori_bounds: lambda must be >= 0");

  AprioriBounds out;
  out.a = a;
  out.b = b;
  out.delta = delta;
  out.T = T;
  out.k = torus_diameter(sys.dim) / delta;

  // Sampled extrema of L(x,0,v). Superlinearity puts the infimum at finite v,
  // so a generous speed cap suffices.
  const int nx = sys.dim == 1 ? 128 : 24;
  const int nv = 129;
  double v_cap = std::max(4.0 * out.k, 16.0);
  double sup_k = -std::numeric_limits<double>::infinity();
  double inf_all = std::numeric_limits<double>::infinity();
  double inf_gauge = std::numeric_limits<double>::infinity();  // inf of L(x,0,v) - |v|
  auto visit = [&](const Point& xx, const Point& vv, double speed) {
    double l = sys.L(xx, 0.0, vv);
    if (speed <= out.k + 1e-12) sup_k = std::max(sup_k, l);
    inf_all = std::min(inf_all, l);
    inf_gauge = std::min(inf_gauge, l - speed);
  };
  if (sys.dim == 1) {
    for (int ix = 0; ix < nx; ++ix) {
      Point xx{ix / static_cast<double>(nx), 0};
      for (int iv = 0; iv < nv; ++iv) {
        double v = -v_cap + 2 * v_cap * iv / (nv - 1);
        visit(xx, Point{v, 0}, std::abs(v));
      }
    }
  } else {
    for (int ix = 0; ix < nx; ++ix)
      for (int iy = 0; iy < nx; ++iy) {
        Point xx{ix / static_cast<double>(nx), iy / static_cast<double>(nx)};
        for (int ir = 0; ir < 17; ++ir)
          for (int ia = 0; ia < 12; ++ia) {
            double r = v_cap * ir / 16.0;
            double ang = 2 * M_PI * ia / 12.0;
            visit(xx, Point{r * std::cos(ang), r * std::sin(ang)}, r);
          }
      }
  }
  out.A = sup_k;
  out.B = inf_all;

  const double lam = sys.lambda;
  const double eT = std::exp(lam * T);
  const double gT = expm1_over_lambda(lam, T);
  double c_low = std::abs(a) * eT + std::abs(out.B) * gT;
  double c_up = std::abs(b) * eT + std::abs(out.A) * gT;
  out.C = std::max(c_low, c_up);

  if (lam < 1e-12) {
    out.K = std::max(c_low, out.C + 1.0 + std::abs(out.B) * T);
  } else {
    out.K = std::max(c_low, std::abs(out.B) / lam + (out.C + 1.0 + std::abs(out.B) / lam) * eT);
  }

  // Gauge constant D with L(x,u,v) >= |v| + D for |u| <= K, then Q so that
  // a + Q*delta - |D|*T exceeds K.
  double D = inf_gauge - lam * out.K;
  out.Q = (out.K + std::abs(D) * T - a) / delta + 1.0;
  return out;
}

}  // namespace chj
