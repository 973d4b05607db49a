#include "supctrl/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "supctrl/errors.hpp"

namespace supctrl {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Converged:
      return "Converged";
    case Termination::MaxIters:
      return "MaxIters";
    case Termination::StepStall:
      return "StepStall";
  }
  return "Unknown";
}

Trajectory project_box(const Trajectory& u, const Vector& lo, const Vector& hi) {
  if (lo.size() != u.dim() || hi.size() != u.dim()) {
    throw BadBounds("bound dimensions do not match the trajectory");
  }
  for (int c = 0; c < u.dim(); ++c) {
    if (!(lo[c] <= hi[c])) throw BadBounds("empty box: lower > upper");
  }
  Trajectory out = u;
  for (int j = 0; j < out.node_count(); ++j) {
    for (int c = 0; c < out.dim(); ++c) {
      out.at(j, c) = std::clamp(out.at(j, c), lo[c], hi[c]);
    }
  }
  return out;
}

namespace {

void validate_config(const OptimizerConfig& cfg) {
  if (!(cfg.armijo_c > 0.0 && cfg.armijo_c < 1.0)) {
    throw ConfigError("armijo_c must lie in (0, 1)");
  }
  if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0)) {
    throw ConfigError("backtrack must lie in (0, 1)");
  }
  if (!(cfg.step0 > 0.0)) throw ConfigError("step0 must be positive");
  if (!(cfg.tol_stationarity >= 0.0)) throw ConfigError("negative tolerance");
  if (cfg.max_iters < 0) throw ConfigError("negative iteration budget");
}

}  // namespace

SolveReport projected_gradient(const ProblemDefinition& problem, double k,
                               const TimeGrid& grid, const OptimizerConfig& config,
                               const Trajectory& u0) {
  validate_config(config);

  SolveReport report;
  Trajectory u = project_box(u0, problem.control_lower, problem.control_upper);
  const double dt = grid.dt;

  GradientResult grad = reduced_gradient(problem, u, k, grid);
  report.objective_history.push_back(grad.objective);

  report.termination = Termination::MaxIters;
  double init_step = config.step0;
  Trajectory prev_u, prev_g;
  bool have_prev = false;

  int iter = 0;
  for (; iter < config.max_iters; ++iter) {
    const double residual = optimality_residual(problem, u, grad.gradient);
    report.stationarity_history.push_back(residual);
    if (residual < config.tol_stationarity) {
      report.termination = Termination::Converged;
      break;
    }

    if (config.step_rule == StepRule::spectral && have_prev) {
      // Barzilai-Borwein guess <du,du>/<du,dg>; kept safe by the
      // backtracking below and clamped against degenerate curvature.
      double uu = 0.0, ug = 0.0;
      for (std::size_t i = 0; i < u.values().size(); ++i) {
        const double du = u.values()[i] - prev_u.values()[i];
        const double dg = grad.gradient.values()[i] - prev_g.values()[i];
        uu += du * du;
        ug += du * dg;
      }
      if (ug > 1e-300 && uu > 0.0) {
        init_step = std::clamp(uu / ug, 1e-10, 1e6);
      }
    } else if (config.step_rule == StepRule::reset) {
      init_step = config.step0;
    }

    // Armijo backtracking along the projected path.
    double step = init_step;
    bool accepted = false;
    Trajectory trial = u;
    ForwardSolveOutput trial_fwd;
    double trial_objective = 0.0;
    while (step >= config.min_step) {
      for (int j = 0; j < u.node_count(); ++j) {
        for (int c = 0; c < u.dim(); ++c) {
          trial.at(j, c) = std::clamp(u.at(j, c) - step * grad.gradient.at(j, c),
                                      problem.control_lower[c],
                                      problem.control_upper[c]);
        }
      }
      double decrease = 0.0;  // <g, u - u+> in the L2 grid inner product
      for (int j = 0; j < u.node_count(); ++j) {
        for (int c = 0; c < u.dim(); ++c) {
          decrease += dt * grad.gradient.at(j, c) * (u.at(j, c) - trial.at(j, c));
        }
      }
      if (decrease <= 0.0) break;  // projected step does not move

      trial_fwd = integrate_regularized(problem, trial, k, grid, true);
      trial_objective = evaluate_objective(problem, trial_fwd, trial);
      if (trial_objective <= grad.objective - config.armijo_c * decrease) {
        accepted = true;
        break;
      }
      step *= config.backtrack;
    }

    if (!accepted) {
      report.termination = Termination::StepStall;
      break;
    }
    if (config.step_rule == StepRule::spectral) {
      prev_u = u;
      prev_g = grad.gradient;
      have_prev = true;
    }
    u = trial;
    grad = reduced_gradient(problem, u, k, grid, std::move(trial_fwd));
    report.objective_history.push_back(trial_objective);
  }
  if (report.termination == Termination::MaxIters) {
    report.stationarity_history.push_back(
        optimality_residual(problem, u, grad.gradient));
  }

  report.iterations = iter;
  report.control = u;
  report.state = grad.forward.state;
  report.adjoint = grad.adjoint.lambda;
  report.jumps = detect_jumps(grad.adjoint, grad.forward, u, problem, grid);
  return report;
}

}  // namespace supctrl
