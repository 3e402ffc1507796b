#include "chj/system.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "chj/errors.hpp"

namespace chj {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

double norm(const Point& p, int dim) {
  double s = p[0] * p[0];
  if (dim == 2) s += p[1] * p[1];
  return std::sqrt(s);
}

double potential(double amp, const Point& x) { return amp * std::cos(kTwoPi * x[0]); }

Point potential_grad(double amp, const Point& x) {
  return {-amp * kTwoPi * std::sin(kTwoPi * x[0]), 0.0};
}

}  // namespace

ContactSystem builtin(const std::string& family, const BuiltinParams& params, int dim) {
  if (dim != 1 && dim != 2) throw ConfigError("builtin: dim must be 1 or 2");
  ContactSystem sys;
  sys.dim = dim;
  sys.family = family;
  sys.amp = params.amp;
  const double amp = params.amp;
  const double lam = params.lambda;

  auto quad = [dim](const Point& p) {
    double s = p[0] * p[0];
    if (dim == 2) s += p[1] * p[1];
    return 0.5 * s;
  };

  if (family == "classical") {
    sys.lambda = 0.0;
    sys.u_independent = true;
    sys.H = [quad](const Point&, double, const Point& p) { return quad(p); };
    sys.H_x = [](const Point&, double, const Point&) { return Point{0, 0}; };
    sys.H_u = [](const Point&, double, const Point&) { return 0.0; };
    sys.H_p = [](const Point&, double, const Point& p) { return p; };
    sys.L = [quad](const Point&, double, const Point& v) { return quad(v); };
    sys.has_closed_L = true;
  } else if (family == "discounted") {
    sys.lambda = lam;
    sys.H = [quad, lam, amp](const Point& x, double u, const Point& p) {
      return quad(p) + lam * u + potential(amp, x);
    };
    sys.H_x = [amp](const Point& x, double, const Point&) { return potential_grad(amp, x); };
    sys.H_u = [lam](const Point&, double, const Point&) { return lam; };
    sys.H_p = [](const Point&, double, const Point& p) { return p; };
    sys.L = [quad, lam, amp](const Point& x, double u, const Point& v) {
      return quad(v) - lam * u - potential(amp, x);
    };
    sys.has_closed_L = true;
  } else if (family == "mechanical") {
    sys.lambda = 0.0;
    sys.u_independent = true;
    sys.H = [quad, amp](const Point& x, double, const Point& p) {
      return quad(p) + potential(amp, x);
    };
    sys.H_x = [amp](const Point& x, double, const Point&) { return potential_grad(amp, x); };
    sys.H_u = [](const Point&, double, const Point&) { return 0.0; };
    sys.H_p = [](const Point&, double, const Point& p) { return p; };
    sys.L = [quad, amp](const Point& x, double, const Point& v) {
      return quad(v) - potential(amp, x);
    };
    sys.has_closed_L = true;
  } else if (family == "nonmonotone") {
    sys.lambda = lam;
    sys.H = [quad, lam, amp](const Point& x, double u, const Point& p) {
      return quad(p) + lam * std::sin(u) + potential(amp, x);
    };
    sys.H_x = [amp](const Point& x, double, const Point&) { return potential_grad(amp, x); };
    sys.H_u = [lam](const Point&, double u, const Point&) { return lam * std::cos(u); };
    sys.H_p = [](const Point&, double, const Point& p) { return p; };
    sys.L = [quad, lam, amp](const Point& x, double u, const Point& v) {
      return quad(v) - lam * std::sin(u) - potential(amp, x);
    };
    sys.has_closed_L = true;
  } else if (family == "coshcase") {
    sys.lambda = lam;
    sys.H = [dim, lam](const Point&, double u, const Point& p) {
      return std::cosh(norm(p, dim)) + lam * u;
    };
    sys.H_x = [](const Point&, double, const Point&) { return Point{0, 0}; };
    sys.H_u = [lam](const Point&, double, const Point&) { return lam; };
    sys.H_p = [dim](const Point&, double, const Point& p) {
      double r = norm(p, dim);
      if (r < 1e-300) return Point{0, 0};
      double f = std::sinh(r) / r;
      return Point{f * p[0], dim == 2 ? f * p[1] : 0.0};
    };
    // sup_p <v,p> - cosh(|p|): maximizer parallel to v with sinh(|p*|) = |v|.
    sys.L = [dim, lam](const Point&, double u, const Point& v) {
      double r = norm(v, dim);
      return r * std::asinh(r) - std::sqrt(1.0 + r * r) - lam * u;
    };
    sys.has_closed_L = true;
  } else {
    throw ConfigError("builtin: unknown family '" + family + "'");
  }
  return sys;
}

namespace {

// 1-D root of H_p(p) = v by expanding bracket + safeguarded bisection/Newton.
double conjugate_root_1d(const ContactSystem& sys, const Point& x, double u, double v) {
  auto hp = [&](double p) { return sys.H_p(x, u, Point{p, 0})[0]; };
  double lo = -1.0, hi = 1.0;
  int expand = 0;
  while (hp(lo) > v) {
    lo *= 2;
    if (++expand > 60) throw ConvexityError("legendre_transform: bracket expansion failed (lower)");
  }
  while (hp(hi) < v) {
    hi *= 2;
    if (++expand > 60) throw ConvexityError("legendre_transform: bracket expansion failed (upper)");
  }
  // H_p is strictly increasing by (H1); bisect with Newton acceleration.
  double p = 0.5 * (lo + hi);
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    double g = hp(p) - v;
    if (g > 0) hi = p; else lo = p;
    double step = 1e-6 * (1.0 + std::abs(p));
    double d2 = (hp(p + step) - hp(p - step)) / (2 * step);
    double cand = d2 > 0 ? p - g / d2 : 0.5 * (lo + hi);
    p = (cand > lo && cand < hi) ? cand : 0.5 * (lo + hi);
  }
  return p;
}

}  // namespace

LegendreResult legendre_transform(const ContactSystem& sys, const Point& x, double u,
                                  const Point& v) {
  Point p_star{0, 0};
  if (sys.dim == 1) {
    p_star[0] = conjugate_root_1d(sys, x, u, v[0]);
  } else {
    // Damped Newton on H_p(p) = v with finite-difference Jacobian, falling
    // back to per-axis bracketed solves when a step fails to improve.
    Point p{0, 0};
    auto res = [&](const Point& q) {
      Point hp = sys.H_p(x, u, q);
      return Point{hp[0] - v[0], hp[1] - v[1]};
    };
    auto rnorm = [](const Point& r) { return std::sqrt(r[0] * r[0] + r[1] * r[1]); };
    bool ok = false;
    for (int it = 0; it < 100; ++it) {
      Point r = res(p);
      if (rnorm(r) < 1e-11) {
        ok = true;
        break;
      }
      double step = 1e-6 * (1.0 + std::max(std::abs(p[0]), std::abs(p[1])));
      Point rpx = res({p[0] + step, p[1]});
      Point rpy = res({p[0], p[1] + step});
      double j00 = (rpx[0] - r[0]) / step, j01 = (rpy[0] - r[0]) / step;
      double j10 = (rpx[1] - r[1]) / step, j11 = (rpy[1] - r[1]) / step;
      double det = j00 * j11 - j01 * j10;
      if (std::abs(det) < 1e-14) break;
      double dx = (-r[0] * j11 + r[1] * j01) / det;
      double dy = (-j00 * r[1] + j10 * r[0]) / det;
      double alpha = 1.0;
      Point next = p;
      for (int back = 0; back < 30; ++back) {
        next = {p[0] + alpha * dx, p[1] + alpha * dy};
        if (rnorm(res(next)) < rnorm(r)) break;
        alpha *= 0.5;
      }
      p = next;
    }
    if (!ok && rnorm(res(p)) >= 1e-11) {
      // Gauss-Seidel on the axes; each 1-D problem is monotone by (H1).
      for (int sweep = 0; sweep < 60; ++sweep) {
        for (int axis = 0; axis < 2; ++axis) {
          auto haxis = [&](double q) {
            Point pt = p;
            pt[axis] = q;
            return sys.H_p(x, u, pt)[axis];
          };
          double lo = p[axis] - 1.0, hi = p[axis] + 1.0;
          int expand = 0;
          while (haxis(lo) > v[axis]) {
            lo = p[axis] + 2 * (lo - p[axis]);
            if (++expand > 60)
              throw ConvexityError("legendre_transform: 2-D bracket expansion failed");
          }
          while (haxis(hi) < v[axis]) {
            hi = p[axis] + 2 * (hi - p[axis]);
            if (++expand > 60)
              throw ConvexityError("legendre_transform: 2-D bracket expansion failed");
          }
          for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            if (haxis(mid) > v[axis]) hi = mid; else lo = mid;
          }
          p[axis] = 0.5 * (lo + hi);
        }
        if (rnorm(res(p)) < 1e-11) break;
      }
      if (rnorm(res(p)) > 1e-8)
        throw ConvexityError("legendre_transform: maximizer search did not converge");
    }
    p_star = p;
  }
  double dot = v[0] * p_star[0] + (sys.dim == 2 ? v[1] * p_star[1] : 0.0);
  return LegendreResult{dot - sys.H(x, u, p_star), p_star};
}

std::string AssumptionReport::summary() const {
  std::ostringstream os;
  os << "(H1) " << (h1_ok ? "pass" : "FAIL") << "  (H2) " << (h2_ok ? "pass" : "FAIL")
     << "  (H3) " << (h3_ok ? "pass" : "FAIL");
  return os.str();
}

AssumptionReport check_assumptions(const ContactSystem& sys, const SampleBox& box,
                                   int samples, std::uint64_t seed) {
  AssumptionReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  std::uniform_real_distribution<double> uu(box.u_lo, box.u_hi);
  std::uniform_real_distribution<double> up(-box.p_max, box.p_max);

  double h1_min = std::numeric_limits<double>::infinity();
  double h2_min_ratio = std::numeric_limits<double>::infinity();
  double h3_max = 0;

  for (int s = 0; s < samples; ++s) {
    Point x{ux(rng), sys.dim == 2 ? ux(rng) : 0.0};
    double u = uu(rng);
    Point p{up(rng), sys.dim == 2 ? up(rng) : 0.0};

    // (H1): positive definiteness of the p-Hessian via central differences.
    double step = 1e-4 * (1.0 + std::abs(p[0]) + std::abs(p[1]));
    double h_0 = sys.H(x, u, p);
    auto shift = [&](int axis, double d) {
      Point q = p;
      q[axis] += d;
      return q;
    };
    double hxx =
        (sys.H(x, u, shift(0, step)) - 2 * h_0 + sys.H(x, u, shift(0, -step))) / (step * step);
    double h1_val = hxx;
    if (sys.dim == 2) {
      double hyy =
          (sys.H(x, u, shift(1, step)) - 2 * h_0 + sys.H(x, u, shift(1, -step))) / (step * step);
      Point qpp{p[0] + step, p[1] + step}, qpm{p[0] + step, p[1] - step};
      Point qmp{p[0] - step, p[1] + step}, qmm{p[0] - step, p[1] - step};
      double hxy = (sys.H(x, u, qpp) - sys.H(x, u, qpm) - sys.H(x, u, qmp) + sys.H(x, u, qmm)) /
                   (4 * step * step);
      double det = hxx * hyy - hxy * hxy;
      h1_val = std::min({hxx, hyy, det});
    }
    if (h1_val < h1_min) {
      h1_min = h1_val;
      rep.h1_worst = {x, u, p, h1_val};
    }

    // (H2) proxy: chord slopes of r -> H(x,u,r*dir) between |p| in {1,2,4,8}
    // must grow by a factor > 1.5 per doubling (u-offsets cancel in slopes).
    double ang = s * 0.618033988749895;
    Point dir{std::cos(kTwoPi * ang), sys.dim == 2 ? std::sin(kTwoPi * ang) : 0.0};
    if (sys.dim == 1) dir = {s % 2 == 0 ? 1.0 : -1.0, 0.0};
    auto hr = [&](double r) {
      return sys.H(x, u, Point{r * dir[0], r * dir[1]});
    };
    double s1 = hr(2) - hr(1);
    double s2 = (hr(4) - hr(2)) / 2;
    double s3 = (hr(8) - hr(4)) / 4;
    double ratio = std::min(s2 / std::max(s1, 1e-300), s3 / std::max(s2, 1e-300));
    if (s1 <= 0) ratio = std::min(ratio, 0.0);
    if (ratio < h2_min_ratio) {
      h2_min_ratio = ratio;
      rep.h2_worst = {x, u, dir, ratio};
    }

    // (H3): |H_u| against the declared lambda.
    double du = 1e-5 * (1.0 + std::abs(u));
    double hu = (sys.H(x, u + du, p) - sys.H(x, u - du, p)) / (2 * du);
    if (std::abs(hu) > h3_max) {
      h3_max = std::abs(hu);
      rep.h3_worst = {x, u, p, hu};
    }
  }

  rep.h1_ok = h1_min > 0;
  rep.h2_ok = h2_min_ratio > 1.5;
  rep.h3_ok = h3_max <= sys.lambda + 1e-9;
  return rep;
}

}  // namespace chj
