#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "chj/grid.hpp"

namespace chj {

// A contact Hamiltonian H(x,u,p) with its partials, the associated Lagrangian
// L(x,u,v), and the uniform Lipschitz bound |dH/du| <= lambda.
struct ContactSystem {
  int dim = 1;
  std::string family;    // one of the builtin ids, or "custom"
  double lambda = 0.0;   // (H3) bound
  double amp = 0.0;      // potential amplitude for the builtin V

  std::function<double(const Point&, double, const Point&)> H;
  std::function<Point(const Point&, double, const Point&)> H_x;
  std::function<double(const Point&, double, const Point&)> H_u;
  std::function<Point(const Point&, double, const Point&)> H_p;

  // Closed form when the family has one, else backed by legendre_transform.
  std::function<double(const Point&, double, const Point&)> L;
  bool has_closed_L = false;

  // True when L does not depend on u (lambda == 0 fast path in the sweeps).
  bool u_independent = false;
};

struct BuiltinParams {
  double lambda = 0.5;
  double amp = 0.0;
};

// Families: classical (H = |p|^2/2), discounted (|p|^2/2 + lambda*u + V),
// mechanical (|p|^2/2 + V), nonmonotone (|p|^2/2 + lambda*sin(u) + V),
// coshcase (cosh(|p|) + lambda*u). V(x) = amp*cos(2*pi*x1).
ContactSystem builtin(const std::string& family, const BuiltinParams& params, int dim = 1);

struct LegendreResult {
  double value;   // L(x,u,v)
  Point p_star;   // maximizer of <v,p> - H(x,u,p)
};

// Convex conjugate in p. Throws ConvexityError when the maximizer search
// cannot bracket (non-superlinear H).
LegendreResult legendre_transform(const ContactSystem& sys, const Point& x, double u,
                                  const Point& v);

struct SampleBox {
  double u_lo = -1.0;
  double u_hi = 1.0;
  double p_max = 4.0;
};

struct AssumptionWitness {
  Point x{0, 0};
  double u = 0;
  Point p{0, 0};
  double value = 0;  // worst offending quantity
};

struct AssumptionReport {
  bool h1_ok = true;  // positive definiteness of H_pp
  bool h2_ok = true;  // superlinearity proxy (chord-slope growth)
  bool h3_ok = true;  // |H_u| <= lambda
  AssumptionWitness h1_worst, h2_worst, h3_worst;
  std::string summary() const;
  bool all_ok() const { return h1_ok && h2_ok && h3_ok; }
};

// Samples (x,u,p) over the box and reports per-assumption pass/fail with the
// worst witness. Failures are reported, never thrown.
AssumptionReport check_assumptions(const ContactSystem& sys, const SampleBox& box,
                                   int samples, std::uint64_t seed = 1);

}  // namespace chj
