#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "chj/action.hpp"

namespace chj {

enum class EvolveMode { direct, picard };

// Semigroup evolution T_t phi stored as time slices of grid functions.
struct ValueField {
  PeriodicGrid grid;
  std::vector<double> times;
  std::vector<std::vector<double>> slices;  // slice 0 equals phi exactly
  GridFunction initial;
  Direction direction = Direction::forward;  // forward sweep realizes T^-_t
  double c_shift = 0.0;
  double dt = 0.0;

  int slice_index(double t) const;
  const std::vector<double>& slice(double t) const;
  double query(const Point& x, double t) const;
  GridFunction slice_function(int k) const;
};

struct PicardStats {
  std::vector<double> gaps;  // sup-norm change per iteration
  int iterations = 0;
};

// One application of the operator A_phi: cumulative DP sweeps with the
// u-argument of L read from the frozen field at the arrival slice.
ValueField picard_apply(const ContactSystem& sys, const GridFunction& phi, const ValueField& u,
                        const DpParams& params);

// Backward solution semigroup T^-_t phi. Mode picard iterates A_phi from
// u == phi until the sup-norm change drops below picard_tol (cap 200); mode
// direct runs the single implicit sweep. Both approximate the same fixed
// point.
ValueField backward_evolve(const ContactSystem& sys, const GridFunction& phi, double T,
                           const DpParams& params, EvolveMode mode = EvolveMode::direct,
                           PicardStats* stats = nullptr, double picard_tol = 1e-8);

// Forward semigroup T^+_t phi (sup / sign mirror).
ValueField forward_evolve(const ContactSystem& sys, const GridFunction& phi, double T,
                          const DpParams& params);

// Streaming evolve without slice storage; callback sees (k, slice at t_k),
// including k = 0. Returning false stops the evolution early.
void evolve_streaming(const ContactSystem& sys, const GridFunction& phi, double T,
                      const DpParams& params, Direction dir,
                      const std::function<bool(int, const std::vector<double>&)>& cb);

// Max over grid of |T_t phi - min_y h_{y,phi(y)}(., t)| with anchors on every
// 4th node.
double representation_residual(const ContactSystem& sys, const GridFunction& phi, double t,
                               const DpParams& params);

// ||T_{t+s} phi - T_t(T_s phi)||_inf with the composition realized through
// the corollary form inf_z h_{z, T_s phi(z)}(., t). s = 0 reduces to the
// identity and returns exactly 0.
double semigroup_residual(const ContactSystem& sys, const GridFunction& phi, double t, double s,
                          const DpParams& params);

// True iff psi < phi pointwise propagates to T_t psi < T_t phi on every
// slice. Requires strict ordering of the inputs.
bool comparison_check(const ContactSystem& sys, const GridFunction& phi, const GridFunction& psi,
                      double T, const DpParams& params);

struct VariationalReport {
  double ineq_violation = 0;  // worst positive excess of u-increments over the action integral
  double equality_gap = 0;    // defect along the dp-traced optimal curve
};

// Checks the variational-solution definition on a backward evolution:
// inequality along random probe curves (test applied to every sub-segment),
// equality along traced minimizers.
VariationalReport variational_solution_residual(const ContactSystem& sys, const ValueField& field,
                                                int probe_curves, std::uint64_t seed = 1);

struct ViscosityReport {
  double max_residual = 0;  // max |w_t + H(x,w,w_x) - c| at smooth points
  int kink_count = 0;       // excluded points across the checked slices
  int checked_points = 0;
};

// Central-difference PDE residual at grid points that look locally C^1;
// kinks are detected by outlier second differences and excluded.
ViscosityReport viscosity_residual(const ContactSystem& sys, const ValueField& field, double c);

// Kink mask for one slice: |second difference| > 10 * median (with a small
// absolute floor so exactly-flat data reports no kinks).
std::vector<char> kink_mask(const std::vector<double>& slice, const PeriodicGrid& grid);

}  // namespace chj
