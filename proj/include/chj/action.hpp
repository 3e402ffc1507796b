#pragma once

#include <cstdint>
#include <vector>

#include "chj/characteristics.hpp"
#include "chj/grid.hpp"
#include "chj/system.hpp"

namespace chj {

enum class Direction { forward, backward };

struct Box {
  double a = -1.0;
  double b = 1.0;
  double delta = 0.5;
  double T = 1.0;
};

// Parameters of the implicit dynamic-programming sweeps.
struct DpParams {
  double dt = 1e-3;
  double r_search = 0.03;   // physical search-window radius per step
  double c_shift = 0.0;     // constant added to L (the c of the ergodic problem)
  bool midpoint_L = false;  // evaluate L's spatial argument at the segment midpoint
  double boot_time = 0.05;  // short-time layer integrated along straight lines
  int fixed_point_cap = 100;
  double dp_tol = 5e-3;     // default property-check slack for n=200, dt=1e-3
};

// Fills r_search from the a-priori speed bounds over the box:
// max(Q, 2k) * dt + 2 * spacing, floored so the boot-layer handoff at
// boot_time never clips the per-step displacement.
DpParams make_dp_params(const ContactSystem& sys, const PeriodicGrid& grid, double dt,
                        const Box& box);

// One implicit DP step. For each node x the new value is the optimum over
// candidates y in the search window of the scalar fixed point
//   w = prev(y) +- dt * (L(y, w, disp/dt) + c_shift),
// with prev read through the monotone piecewise-linear interpolant and the
// candidate refined inside the two grid cells adjacent to the best node.
GridFunction dp_step(const ContactSystem& sys, const GridFunction& prev,
                     const DpParams& params, Direction dir);

// Implicit action function values on grid x time slices.
struct ActionField {
  PeriodicGrid grid;
  std::vector<double> times;                 // 0 = t_0 < t_1 < ... < t_K
  std::vector<std::vector<double>> slices;   // [time][node]
  Point anchor_x{0, 0};
  double anchor_u = 0;
  Direction direction = Direction::forward;
  DpParams params;

  int slice_index(double t) const;           // exact slice lookup
  const std::vector<double>& slice(double t) const;
  double query(const Point& x, double t) const;
  GridFunction slice_function(int k) const;
};

// Forward implicit action h_{x0,u0}(., t_k), computed by penalty-seeded
// implicit DP with a short-time straight-line layer near the anchor. The
// anchor is snapped to the nearest node.
ActionField forward_action(const ContactSystem& sys, const Point& x0, double u0, double t,
                           const PeriodicGrid& grid, const DpParams& params);

// Backward implicit action h^{x0,u0}(., t_k) (terminal anchoring, sup/sign
// mirror of the forward construction).
ActionField backward_action(const ContactSystem& sys, const Point& x0, double u0, double t,
                            const PeriodicGrid& grid, const DpParams& params);

// Max over grid x of |h(x, t+s) - min_y h_{y, h(y,t)}(x, s)| with the inner
// fields re-anchored at every 4th node. s below 10*dt routes to the one-step
// sweep-consistency recomputation.
double markov_residual(const ContactSystem& sys, const ActionField& field, double t, double s);

// Monotone bisection in u0 for h_{x0,u0}(x,t) = target_u (unique root by
// Monotonicity I). Bracket grows geometrically from the reversibility-proof
// bounds; more than 60 doublings throws ConvergenceError.
double solve_initial_value(const ContactSystem& sys, const Point& x0, const Point& x, double t,
                           double target_u, const PeriodicGrid& grid, const DpParams& params);

// |h^{x,u}(x0,t) - u0| with u = h_{x0,u0}(x,t).
double duality_roundtrip(const ContactSystem& sys, const Point& x0, double u0, const Point& x,
                         double t, const PeriodicGrid& grid, const DpParams& params);

// Worst sampled ratio |h^{c1} - h^{c2}| / (e^{lambda t} t |c1 - c2|) over the
// box; must not exceed 1 + dp_tol.
double c_shift_bound_check(const ContactSystem& sys, const Point& x0, double u0, double c1,
                           double c2, const Box& box, const PeriodicGrid& grid,
                           const DpParams& params, int samples = 64, std::uint64_t seed = 1);

}  // namespace chj
