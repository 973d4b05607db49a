#pragma once

#include <optional>
#include <vector>

#include "supctrl/problem.hpp"
#include "supctrl/smooth_max.hpp"
#include "supctrl/time_grid.hpp"
#include "supctrl/trajectory.hpp"

namespace supctrl {

// Explicit-Euler solve of the state equation.  `state` spans [-tau, T] with
// the history preloaded from phi; `aux_v` holds the window-max surrogate fed
// to F at each forward node (smooth max in regularized mode, exact max in
// hard mode).  The window of forward node j consists of the N = tau/dt
// samples at nodes j-N .. j-1, i.e. it trails the current node by one sample
// and reaches exactly tau back; this single indexing convention is shared by
// the integrators, the smooth-max weights and the adjoint transpose.
struct ForwardSolveOutput {
  Trajectory state;
  Trajectory aux_v;
  bool regularized = false;
  double k = 0.0;
  // Per-(forward node, component) window statistics, row-major; enough to
  // reconstruct the smooth-max derivative weights without storing N weights
  // per step.  Populated in regularized mode when requested.
  std::vector<detail::WindowStats> window_cache;

  bool has_window_cache() const { return !window_cache.empty(); }
};

ForwardSolveOutput integrate_regularized(const ProblemDefinition& problem,
                                         const Trajectory& control, double k,
                                         const TimeGrid& grid,
                                         bool cache_weights = true);

ForwardSolveOutput integrate_hardmax(const ProblemDefinition& problem,
                                     const Trajectory& control,
                                     const TimeGrid& grid);

// Left-rectangle quadrature of the running cost plus the terminal cost.
double evaluate_objective(const ProblemDefinition& problem,
                          const ForwardSolveOutput& output,
                          const Trajectory& control);

// Picard iteration on the integral form of the state equation, using the
// same left-rectangle rule as the Euler sweep so both share one fixed point.
// `k` empty selects the hard window max.  Throws NoConvergence when the
// sup-norm gap between successive iterates stays above tol for max_iter
// sweeps.
struct PicardResult {
  ForwardSolveOutput output;
  int iterations = 0;
  std::vector<double> residual_history;
};
PicardResult picard_solve(const ProblemDefinition& problem,
                          const Trajectory& control, const TimeGrid& grid,
                          std::optional<double> k, double tol, int max_iter);

// Sup-norm defect of `state` in the integral equation, evaluated with the
// solver's own quadrature (zero, up to roundoff, for solver output).
double integral_residual(const ProblemDefinition& problem, const Trajectory& state,
                         const Trajectory& control, std::optional<double> k);
double integral_residual(const ProblemDefinition& problem,
                         const ForwardSolveOutput& output,
                         const Trajectory& control);

}  // namespace supctrl
