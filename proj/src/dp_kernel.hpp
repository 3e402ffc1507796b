#pragma once

// Shared sweep kernel for the implicit action and semigroup modules. One step
// maps a slice of node values to the next slice: for every target node the
// optimum over candidate departure points y inside the search window, with
// slice values read through the monotone piecewise-linear interpolant and the
// running value entering L either implicitly (fixed point) or frozen.

#include <cmath>
#include <vector>

#include "chj/errors.hpp"
#include "chj/grid.hpp"
#include "chj/parallel.hpp"
#include "chj/system.hpp"

namespace chj::detail {

constexpr double kSeedPenalty = 1e6;
// Values this deep into the penalty cone skip sub-cell refinement.
constexpr double kPenaltySkip = 1e5;
constexpr int kGoldenIters = 12;

struct SweepCtx {
  const ContactSystem* sys;
  int dim;
  int n;
  double dx;
  double dt;
  double c_shift;
  double sign;  // +1: forward (minimize), -1: backward (maximize)
  bool midpoint_L;
  int window;   // node radius, clamped below n/2
  int fp_cap;
};

inline int wrap_index(int k, int n) {
  k %= n;
  return k < 0 ? k + n : k;
}

// Piecewise-linear read of a slice at fractional node coordinate (1-D).
inline double pl_read_1d(const std::vector<double>& v, int n, double y_nodes) {
  double fj = std::floor(y_nodes);
  int j = wrap_index(static_cast<int>(fj), n);
  double s = y_nodes - fj;
  double a = v[j];
  double b = v[j + 1 == n ? 0 : j + 1];
  return a + s * (b - a);
}

inline double pl_read_2d(const std::vector<double>& v, int n, double y0, double y1) {
  double f0 = std::floor(y0), f1 = std::floor(y1);
  int i = wrap_index(static_cast<int>(f0), n);
  int j = wrap_index(static_cast<int>(f1), n);
  int ip = i + 1 == n ? 0 : i + 1;
  int jp = j + 1 == n ? 0 : j + 1;
  double s0 = y0 - f0, s1 = y1 - f1;
  double v00 = v[i * n + j], v10 = v[ip * n + j], v01 = v[i * n + jp], v11 = v[ip * n + jp];
  double a = v00 + s0 * (v10 - v00);
  double b = v01 + s0 * (v11 - v01);
  return a + s1 * (b - a);
}

// Scalar fixed point w = prev +- dt*(L(pt, w, vel) + c); contraction since
// dt*lambda <= 1/2.
inline double solve_implicit(const SweepCtx& ctx, const Point& pt, const Point& vel,
                             double prev_val) {
  const auto& L = ctx.sys->L;
  if (ctx.sys->u_independent)
    return prev_val + ctx.sign * ctx.dt * (L(pt, 0.0, vel) + ctx.c_shift);
  double w = prev_val;
  for (int it = 0; it < ctx.fp_cap; ++it) {
    double wn = prev_val + ctx.sign * ctx.dt * (L(pt, w, vel) + ctx.c_shift);
    if (std::abs(wn - w) <= 1e-13 * std::max(1.0, std::abs(wn))) return wn;
    w = wn;
  }
  throw ContractionError("dp_step: implicit solve exceeded iteration cap (dt too large?)");
}

inline double frozen_value(const SweepCtx& ctx, const Point& pt, const Point& vel,
                           double prev_val, double u_fixed) {
  return prev_val + ctx.sign * ctx.dt * (ctx.sys->L(pt, u_fixed, vel) + ctx.c_shift);
}

// Candidate at continuous departure coordinate yy (node units) for target
// node index i (1-D). frozen_u: pointer to the frozen value, or nullptr for
// the implicit solve.
inline double candidate_1d(const SweepCtx& ctx, const std::vector<double>& prev, int i,
                           double yy, const double* frozen_u) {
  double disp = (i - yy) * ctx.dx;  // x - y, |disp| < 1/2 by the window clamp
  Point vel{ctx.sign * disp / ctx.dt, 0.0};
  double y_wrapped = (yy - std::floor(yy / ctx.n) * ctx.n) * ctx.dx;
  Point pt{y_wrapped, 0.0};
  if (ctx.midpoint_L) {
    double m = y_wrapped + 0.5 * disp;
    pt[0] = m - std::floor(m);
  }
  double pv = pl_read_1d(prev, ctx.n, yy);
  return frozen_u ? frozen_value(ctx, pt, vel, pv, *frozen_u)
                  : solve_implicit(ctx, pt, vel, pv);
}

// Golden-section optimum of the candidate over yy in [a, b] (node units).
inline double golden_1d(const SweepCtx& ctx, const std::vector<double>& prev, int i, double a,
                        double b, const double* frozen_u) {
  constexpr double kPhi = 0.6180339887498949;
  double c1 = b - kPhi * (b - a);
  double c2 = a + kPhi * (b - a);
  double f1 = ctx.sign * candidate_1d(ctx, prev, i, c1, frozen_u);
  double f2 = ctx.sign * candidate_1d(ctx, prev, i, c2, frozen_u);
  for (int it = 0; it < kGoldenIters; ++it) {
    if (f1 < f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - kPhi * (b - a);
      f1 = ctx.sign * candidate_1d(ctx, prev, i, c1, frozen_u);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + kPhi * (b - a);
      f2 = ctx.sign * candidate_1d(ctx, prev, i, c2, frozen_u);
    }
  }
  return ctx.sign * std::min(f1, f2);
}

inline void sweep_1d(const SweepCtx& ctx, const std::vector<double>& prev,
                     const std::vector<double>* frozen, std::vector<double>& out) {
  const int n = ctx.n;
  const int W = ctx.window;
  parallel_for(n, [&](int i) {
    const double* fu = frozen ? &(*frozen)[i] : nullptr;
    double best = 0;
    int best_o = 0;
    bool first = true;
    for (int o = -W; o <= W; ++o) {
      int j = wrap_index(i + o, n);
      double disp = -o * ctx.dx;
      Point vel{ctx.sign * disp / ctx.dt, 0.0};
      Point pt = {j * ctx.dx, 0.0};
      if (ctx.midpoint_L) {
        double m = pt[0] + 0.5 * disp;
        pt[0] = m - std::floor(m);
      }
      double w = fu ? frozen_value(ctx, pt, vel, prev[j], *fu)
                    : solve_implicit(ctx, pt, vel, prev[j]);
      if (first || ctx.sign * w < ctx.sign * best) {
        best = w;
        best_o = o;
        first = false;
      }
    }
    if (std::abs(best) < kPenaltySkip) {
      double lo = golden_1d(ctx, prev, i, i + best_o - 1.0, i + best_o, fu);
      double hi = golden_1d(ctx, prev, i, i + best_o, i + best_o + 1.0, fu);
      if (ctx.sign > 0)
        best = std::min({best, lo, hi});
      else
        best = std::max({best, lo, hi});
    }
    out[i] = best;
  });
}

inline double candidate_2d(const SweepCtx& ctx, const std::vector<double>& prev, int ti, int tj,
                           double y0, double y1, const double* frozen_u) {
  double d0 = (ti - y0) * ctx.dx;
  double d1 = (tj - y1) * ctx.dx;
  Point vel{ctx.sign * d0 / ctx.dt, ctx.sign * d1 / ctx.dt};
  double w0 = (y0 - std::floor(y0 / ctx.n) * ctx.n) * ctx.dx;
  double w1 = (y1 - std::floor(y1 / ctx.n) * ctx.n) * ctx.dx;
  Point pt{w0, w1};
  if (ctx.midpoint_L) {
    double m0 = w0 + 0.5 * d0, m1 = w1 + 0.5 * d1;
    pt = {m0 - std::floor(m0), m1 - std::floor(m1)};
  }
  double pv = pl_read_2d(prev, ctx.n, y0, y1);
  return frozen_u ? frozen_value(ctx, pt, vel, pv, *frozen_u)
                  : solve_implicit(ctx, pt, vel, pv);
}

inline void sweep_2d(const SweepCtx& ctx, const std::vector<double>& prev,
                     const std::vector<double>* frozen, std::vector<double>& out) {
  const int n = ctx.n;
  const int W = ctx.window;
  parallel_for(n * n, [&](int idx) {
    int ti = idx / n, tj = idx % n;
    const double* fu = frozen ? &(*frozen)[idx] : nullptr;
    double best = 0;
    double b0 = ti, b1 = tj;
    bool first = true;
    for (int o0 = -W; o0 <= W; ++o0)
      for (int o1 = -W; o1 <= W; ++o1) {
        double w = candidate_2d(ctx, prev, ti, tj, ti + o0, tj + o1, fu);
        if (first || ctx.sign * w < ctx.sign * best) {
          best = w;
          b0 = ti + o0;
          b1 = tj + o1;
          first = false;
        }
      }
    if (std::abs(best) < kPenaltySkip) {
      // Cyclic per-axis golden refinement around the best node.
      constexpr double kPhi = 0.6180339887498949;
      for (int round = 0; round < 2; ++round)
        for (int axis = 0; axis < 2; ++axis) {
          double a = (axis == 0 ? b0 : b1) - 1.0;
          double b = (axis == 0 ? b0 : b1) + 1.0;
          auto eval = [&](double y) {
            double q0 = axis == 0 ? y : b0;
            double q1 = axis == 0 ? b1 : y;
            return ctx.sign * candidate_2d(ctx, prev, ti, tj, q0, q1, fu);
          };
          double c1 = b - kPhi * (b - a), c2 = a + kPhi * (b - a);
          double f1 = eval(c1), f2 = eval(c2);
          for (int it = 0; it < kGoldenIters; ++it) {
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
          double y_best = f1 < f2 ? c1 : c2;
          double f_best = std::min(f1, f2);
          if (f_best < ctx.sign * best) {
            best = ctx.sign * f_best;
            (axis == 0 ? b0 : b1) = y_best;
          }
        }
    }
    out[idx] = best;
  });
}

inline void sweep(const SweepCtx& ctx, const std::vector<double>& prev,
                  const std::vector<double>* frozen, std::vector<double>& out) {
  if (ctx.dim == 1)
    sweep_1d(ctx, prev, frozen, out);
  else
    sweep_2d(ctx, prev, frozen, out);
}

}  // namespace chj::detail
