#pragma once

#include <stdexcept>
#include <string>

namespace chj {

// Configuration / input problems: bad family name, invalid grid, violated
// operation preconditions. CLI maps these to exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures inside a solver. CLI maps these to exit code 2.
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

// The implicit one-step solve did not contract within its iteration cap;
// signals dt too large for the system's Lipschitz constant.
struct ContractionError : SolverError {
  explicit ContractionError(const std::string& msg) : SolverError(msg) {}
};

// A characteristics trajectory left the finite range.
struct BlowupError : SolverError {
  BlowupError(const std::string& msg, double escape_time_)
      : SolverError(msg), escape_time(escape_time_) {}
  double escape_time;
};

// Two-point shooting found no seed hitting the target within tolerance.
struct ShootingError : SolverError {
  explicit ShootingError(const std::string& msg) : SolverError(msg) {}
};

// Convex maximizer search failed to bracket (non-superlinear input).
struct ConvexityError : SolverError {
  explicit ConvexityError(const std::string& msg) : SolverError(msg) {}
};

// An iteration (Picard, bracket expansion, bisection) exceeded its cap.
struct ConvergenceError : SolverError {
  explicit ConvergenceError(const std::string& msg) : SolverError(msg) {}
};

// Monotone-in-c classification came back non-monotone.
struct InconsistencyError : SolverError {
  explicit InconsistencyError(const std::string& msg) : SolverError(msg) {}
};

// Monotone FD scheme violated its discrete comparison principle.
struct SchemeError : SolverError {
  explicit SchemeError(const std::string& msg) : SolverError(msg) {}
};

}  // namespace chj
