#pragma once

#include <vector>

#include "supctrl/adjoint.hpp"

namespace supctrl {

// How the Armijo search picks its first trial step each iteration: a
// spectral (Barzilai-Borwein) guess from the last accepted step, or a plain
// reset to step0.  The spectral rule cuts iteration counts by two orders of
// magnitude on badly conditioned tracking problems; backtracking still
// guards every step, so monotone descent is kept either way.
enum class StepRule { spectral, reset };

struct OptimizerConfig {
  int max_iters = 1000;
  double armijo_c = 1e-4;       // sufficient-decrease coefficient
  double backtrack = 0.5;       // step shrink factor
  double step0 = 1.0;           // first trial step of the first iteration
  double tol_stationarity = 1e-8;
  double min_step = 1e-14;      // floor before declaring a stall
  StepRule step_rule = StepRule::spectral;
};

enum class Termination { Converged, MaxIters, StepStall };

const char* to_string(Termination t);

struct SolveReport {
  Trajectory control;                      // final iterate (feasible)
  Trajectory state;                        // span [-tau, T]
  Trajectory adjoint;                      // span [0, T]
  std::vector<double> objective_history;   // J at u0, then after each accepted step
  std::vector<double> stationarity_history;
  std::vector<JumpRecord> jumps;
  int iterations = 0;
  Termination termination = Termination::MaxIters;

  double final_objective() const { return objective_history.back(); }
  double final_stationarity() const { return stationarity_history.back(); }
};

// Componentwise clip of every node into [lo, hi].  Throws BadBounds on an
// empty box.
Trajectory project_box(const Trajectory& u, const Vector& lo, const Vector& hi);

// Projected gradient descent with Armijo backtracking on the discrete
// objective at fixed sharpness k.  Sufficient decrease is measured against
// the projected step:  accept u+ = Pi(u - s g) once
// J(u+) <= J(u) - c * <g, u - u+>_{L2}.  Every accepted step strictly
// decreases J; iterates stay feasible.
SolveReport projected_gradient(const ProblemDefinition& problem, double k,
                               const TimeGrid& grid, const OptimizerConfig& config,
                               const Trajectory& u0);

}  // namespace supctrl
