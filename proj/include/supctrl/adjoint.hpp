#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "supctrl/forward.hpp"

namespace supctrl {

// Discrete adjoint of the regularized forward sweep: lambda is the exact
// transpose of the linearized Euler recursion, so the reduced gradient it
// yields differentiates the discrete objective to machine precision.
// dlambda holds forward differences (lambda_{j+1} - lambda_j) / dt (zero at
// the final node), the quantity whose spikes mark adjoint jumps.
struct AdjointOutput {
  Trajectory lambda;   // span [0, T], dim n, lambda(T) = 0
  Trajectory dlambda;  // span [0, T], dim n
};

// One steep adjoint transition, located at a strict local maximum of a state
// component, together with the jump the integrated weight density predicts
// for it.  `magnitude` estimates lambda_i(s0+) - lambda_i(s0-) from the nodes
// framing the spike cluster; `predicted` integrates lambda^T F_y e_i over the
// interval of times whose trailing window attains its maximum uniquely at s0
// (empty when no such interval exists).
struct JumpRecord {
  int component = 0;
  double time = 0.0;
  double magnitude = 0.0;
  double predicted = 0.0;
  std::optional<std::pair<double, double>> argmax_interval;
};

// Backward sweep with forward-scattering of the delayed window terms: node j
// receives Delta-t^2-weighted contributions from every later step whose
// window contains it.  Reuses fwd's cached window statistics when they match
// `k`; recomputes them from the stored state otherwise.  With `k` empty the
// sharpness is taken from fwd; throws MissingWeights when fwd was not a
// regularized solve either.
AdjointOutput solve_discrete_adjoint(const ProblemDefinition& problem,
                                     const ForwardSolveOutput& fwd,
                                     const Trajectory& control,
                                     std::optional<double> k,
                                     const TimeGrid& grid);

struct GradientResult {
  Trajectory gradient;  // span [0, T], dim m; zero at the final node
  double objective = 0.0;
  ForwardSolveOutput forward;
  AdjointOutput adjoint;
};

// Reduced gradient of the discrete objective as a function on the grid:
// g(t_j) = j_u(t_j, x_j, u_j) - lambda_{j+1}^T F1(x_j, v_j).
GradientResult reduced_gradient(const ProblemDefinition& problem,
                                const Trajectory& control, double k,
                                const TimeGrid& grid);
// Same, reusing a forward solve already computed for this control.
GradientResult reduced_gradient(const ProblemDefinition& problem,
                                const Trajectory& control, double k,
                                const TimeGrid& grid, ForwardSolveOutput forward);

// Sup-norm of u - Pi_U(u - g): zero exactly when the discrete first-order
// conditions hold on the control box.
double optimality_residual(const ProblemDefinition& problem,
                           const Trajectory& control, double k,
                           const TimeGrid& grid);
// Same measure from an already-computed gradient.
double optimality_residual(const ProblemDefinition& problem,
                           const Trajectory& control, const Trajectory& gradient);

// Flags clusters of |dlambda/dt| spikes above spike_threshold x its median,
// estimates the one-sided limits one node outside each cluster, and
// quadratures the predicted jump over the detected unique-argmax interval.
std::vector<JumpRecord> detect_jumps(const AdjointOutput& adj,
                                     const ForwardSolveOutput& fwd,
                                     const Trajectory& control,
                                     const ProblemDefinition& problem,
                                     const TimeGrid& grid,
                                     double spike_threshold = 20.0);

}  // namespace supctrl
