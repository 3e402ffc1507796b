#pragma once

#include <vector>

#include "chj/system.hpp"

namespace chj {

struct ContactState {
  Point x{0, 0};
  double u = 0;
  Point p{0, 0};
};

struct StateDeriv {
  Point dx{0, 0};
  double du = 0;
  Point dp{0, 0};
};

// Right-hand side of the contact Hamilton equations:
//   dx = H_p,  dp = -H_x - H_u * p,  du = <p, H_p> - H.
StateDeriv vector_field(const ContactSystem& sys, const ContactState& s);

struct Trajectory {
  std::vector<double> times;
  std::vector<ContactState> states;
  double energy(const ContactSystem& sys, int k) const;
};

// Fixed-step RK4 integration on [0,t]. Throws BlowupError with the escape
// time if the state leaves the finite range.
Trajectory flow(const ContactSystem& sys, const ContactState& s0, double t, double dt);

// Max over interior samples of |dH/ds + H * H_u| by central differences;
// O(dt^2) on smooth systems. Throws ConfigError for trajectories with fewer
// than 3 samples.
double energy_drift_residual(const ContactSystem& sys, const Trajectory& traj);

struct ShootBranch {
  Point p0{0, 0};
  double u_end = 0;
  double hit_error = 0;  // periodic distance of x(t) to the target
};

struct ShootParams {
  int multistart = 41;
  double radius = 0;     // p0 search radius; 0 = derive from apriori bounds
  double shoot_tol = 0;  // required terminal position accuracy (2*spacing typical)
  double dt = 1e-3;
};

struct ShootResult {
  Trajectory trajectory;          // the branch with the smallest terminal u
  double u_end = 0;
  Point p0{0, 0};
  std::vector<ShootBranch> branches;  // every accepted branch
};

// Two-point shooting for minimizers of the implicit action: multistart over
// initial momenta, refined on terminal position error. Throws ShootingError
// when no seed hits the target within shoot_tol.
ShootResult shoot_minimizer(const ContactSystem& sys, const Point& x0, double u0,
                            const Point& x, double t, const ShootParams& params);

// Explicit constants from the a-priori compactness estimate over the box
// Omega_{a,b,delta,T}.
struct AprioriBounds {
  double k = 0;  // speed scale diam(M)/delta
  double A = 0;  // sup of L(x,0,v) over |v| <= k
  double B = 0;  // inf of L(x,0,v)
  double C = 0;  // sup bound on |h| over the box
  double K = 0;  // along-minimizer bound on |u(s)|
  double Q = 0;  // minimizing-speed threshold
  double a = 0, b = 0, delta = 0, T = 0;
};

AprioriBounds apriori_bounds(const ContactSystem& sys, double a, double b, double delta,
                             double T);

}  // namespace chj
