#include "supctrl/forward.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "supctrl/errors.hpp"

namespace supctrl {

namespace {

void check_setup(const ProblemDefinition& p, const Trajectory& control,
                 const TimeGrid& grid) {
  if (control.span() != Span::Forward) {
    throw Error("control trajectory must span [0, T]");
  }
  if (control.dim() != p.control_dim) {
    throw Error("control dimension does not match problem");
  }
  if (!(control.grid() == grid)) {
    throw Error("control trajectory lives on a different grid");
  }
  if (std::abs(grid.tau - p.tau) > 1e-9 * std::max(1.0, p.tau) ||
      std::abs(grid.horizon - p.horizon) > 1e-9 * std::max(1.0, p.horizon)) {
    throw Error("grid tau/T do not match the problem definition");
  }
}

// Exact window maximum over the trailing window, one monotone deque per
// component; O(1) amortized per step.
class SlidingMax {
 public:
  SlidingMax(const Trajectory& state, const TimeGrid& grid)
      : state_(state), dims_(state.dim()), deques_(state.dim()) {
    for (int node = 0; node < grid.n_hist; ++node) push(node);
  }

  double max(int comp) const { return state_.at(deques_[comp].front(), comp); }

  // After the window of forward node j has been consumed: admit grid node
  // n_hist + j and expire everything older than the next window start.
  void advance(const TimeGrid& grid, int j) {
    push(grid.n_hist + j);
    const int lower = j + 1;  // next window = grid nodes [j+1, n_hist+j]
    for (auto& dq : deques_) {
      while (dq.front() < lower) dq.pop_front();
    }
  }

 private:
  void push(int node) {
    for (int c = 0; c < dims_; ++c) {
      auto& dq = deques_[c];
      const double v = state_.at(node, c);
      while (!dq.empty() && state_.at(dq.back(), c) <= v) dq.pop_back();
      dq.push_back(node);
    }
  }

  const Trajectory& state_;
  int dims_;
  std::vector<std::deque<int>> deques_;
};

// Window-max surrogate for one state trajectory: smooth max when the problem
// couples to it and a regularized solve was requested, exact max otherwise.
class WindowEval {
 public:
  WindowEval(const ProblemDefinition& p, const Trajectory& state,
             const TimeGrid& grid, bool regularized, double k,
             std::vector<detail::WindowStats>* cache)
      : state_(state),
        grid_(grid),
        k_(k),
        lie_(regularized && p.max_coupled),
        cache_(cache) {
    if (!lie_) hard_.emplace(state, grid);
  }

  void value_at(int j, Vector& v) {
    const int n = state_.dim();
    if (lie_) {
      // Window of forward node j starts at grid node j (length n_hist).
      const double* base =
          state_.values().data() + static_cast<std::size_t>(j) * n;
      for (int c = 0; c < n; ++c) {
        const auto st = detail::scan_window(base + c, grid_.n_hist, n, k_);
        v[c] = st.wmax + std::log(grid_.dt * st.shifted_sum) / k_;
        if (cache_) (*cache_)[static_cast<std::size_t>(j) * n + c] = st;
      }
    } else {
      for (int c = 0; c < n; ++c) v[c] = hard_->max(c);
    }
  }

  void advance(int j) {
    if (!lie_) hard_->advance(grid_, j);
  }

 private:
  const Trajectory& state_;
  const TimeGrid& grid_;
  double k_;
  bool lie_;
  std::vector<detail::WindowStats>* cache_;
  std::optional<SlidingMax> hard_;
};

// Right-hand side assembly workspace: F0(x, v) + F1(x, v) u with the optional
// plant control map applied to u.
struct RhsEval {
  explicit RhsEval(const ProblemDefinition& p)
      : problem(p),
        x(p.state_dim),
        u(p.control_dim),
        f0v(p.state_dim),
        rhs(p.state_dim),
        f1m(p.state_dim, p.control_dim) {}

  void operator()(const Trajectory& state, int grid_node, const Vector& v,
                  const Trajectory& control, int fwd_node) {
    for (int c = 0; c < problem.state_dim; ++c) x[c] = state.at(grid_node, c);
    for (int c = 0; c < problem.control_dim; ++c) {
      const double raw = control.at(fwd_node, c);
      u[c] = problem.plant_control_map ? problem.plant_control_map(raw) : raw;
    }
    problem.f0(x, v, f0v);
    problem.f1(x, v, f1m);
    rhs.noalias() = f0v + f1m * u;
  }

  const ProblemDefinition& problem;
  Vector x, u, f0v, rhs;
  Matrix f1m;
};

void preload_history(const ProblemDefinition& p, const TimeGrid& grid,
                     Trajectory& state) {
  Vector h(p.state_dim);
  for (int node = 0; node <= grid.n_hist; ++node) {
    p.history(grid.time(node), h);
    for (int c = 0; c < p.state_dim; ++c) state.at(node, c) = h[c];
  }
}

[[noreturn]] void throw_non_finite(double t) {
  std::ostringstream msg;
  msg << "state became non-finite at t = " << t
      << " (unstable step size or diverging dynamics)";
  throw NonFinite(msg.str());
}

ForwardSolveOutput integrate_impl(const ProblemDefinition& p,
                                  const Trajectory& control, const TimeGrid& grid,
                                  bool regularized, double k, bool cache_weights) {
  check_setup(p, control, grid);
  if (regularized && !(k > 0.0)) throw BadSharpness("integrate: k must be positive");

  const int n = p.state_dim;
  const int H = grid.n_hist;
  const int M = grid.n_fwd;

  ForwardSolveOutput out;
  out.state = Trajectory(grid, n, Span::Full);
  out.aux_v = Trajectory(grid, n, Span::Forward);
  out.regularized = regularized;
  out.k = regularized ? k : 0.0;
  if (regularized && p.max_coupled && cache_weights) {
    out.window_cache.resize(static_cast<std::size_t>(M + 1) * n);
  }

  preload_history(p, grid, out.state);

  WindowEval window(p, out.state, grid, regularized, k,
                    out.has_window_cache() ? &out.window_cache : nullptr);
  RhsEval rhs(p);
  Vector v(n);

  for (int j = 0; j <= M; ++j) {
    window.value_at(j, v);
    for (int c = 0; c < n; ++c) out.aux_v.at(j, c) = v[c];
    if (j == M) break;
    rhs(out.state, H + j, v, control, j);
    for (int c = 0; c < n; ++c) {
      const double next = out.state.at(H + j, c) + grid.dt * rhs.rhs[c];
      if (!std::isfinite(next)) throw_non_finite(grid.forward_time(j + 1));
      out.state.at(H + j + 1, c) = next;
    }
    window.advance(j);
  }
  return out;
}

}  // namespace

ForwardSolveOutput integrate_regularized(const ProblemDefinition& problem,
                                         const Trajectory& control, double k,
                                         const TimeGrid& grid, bool cache_weights) {
  return integrate_impl(problem, control, grid, true, k, cache_weights);
}

ForwardSolveOutput integrate_hardmax(const ProblemDefinition& problem,
                                     const Trajectory& control,
                                     const TimeGrid& grid) {
  return integrate_impl(problem, control, grid, false, 0.0, false);
}

double evaluate_objective(const ProblemDefinition& problem,
                          const ForwardSolveOutput& output,
                          const Trajectory& control) {
  const TimeGrid& grid = output.state.grid();
  check_setup(problem, control, grid);
  const int n = problem.state_dim;
  Vector x(n), u(problem.control_dim);
  // Compensated summation: the line search compares objectives whose
  // difference can sit near the rounding floor of a plain sum.
  double acc = 0.0;
  double carry = 0.0;
  auto add = [&](double term) {
    const double y = term - carry;
    const double next = acc + y;
    carry = (next - acc) - y;
    acc = next;
  };
  for (int j = 0; j < grid.n_fwd; ++j) {
    for (int c = 0; c < n; ++c) x[c] = output.state.at(grid.n_hist + j, c);
    for (int c = 0; c < problem.control_dim; ++c) u[c] = control.at(j, c);
    add(grid.dt * problem.running_cost(grid.forward_time(j), x, u));
  }
  if (problem.has_terminal_cost()) {
    for (int c = 0; c < n; ++c) {
      x[c] = output.state.at(grid.n_hist + grid.n_fwd, c);
    }
    add(problem.terminal_cost(x));
  }
  return acc;
}

PicardResult picard_solve(const ProblemDefinition& problem,
                          const Trajectory& control, const TimeGrid& grid,
                          std::optional<double> k, double tol, int max_iter) {
  check_setup(problem, control, grid);
  if (!(tol > 0.0)) throw Error("picard_solve: tol must be positive");
  const bool regularized = k.has_value();
  if (regularized && !(*k > 0.0)) throw BadSharpness("picard_solve: k must be positive");

  const int n = problem.state_dim;
  const int H = grid.n_hist;
  const int M = grid.n_fwd;

  // Initial iterate: phi(min(t, 0)), i.e. the history held constant forward.
  Trajectory prev(grid, n, Span::Full);
  preload_history(problem, grid, prev);
  for (int j = 1; j <= M; ++j) {
    for (int c = 0; c < n; ++c) prev.at(H + j, c) = prev.at(H, c);
  }
  Trajectory next = prev;

  RhsEval rhs(problem);
  Vector v(n), acc(n);

  PicardResult result;
  bool converged = false;
  for (int iter = 1; iter <= max_iter; ++iter) {
    WindowEval window(problem, prev, grid, regularized, k.value_or(0.0), nullptr);
    for (int c = 0; c < n; ++c) acc[c] = prev.at(H, c);
    double residual = 0.0;
    for (int j = 0; j < M; ++j) {
      window.value_at(j, v);
      rhs(prev, H + j, v, control, j);
      for (int c = 0; c < n; ++c) {
        acc[c] += grid.dt * rhs.rhs[c];
        if (!std::isfinite(acc[c])) throw_non_finite(grid.forward_time(j + 1));
        next.at(H + j + 1, c) = acc[c];
        residual = std::max(residual, std::abs(acc[c] - prev.at(H + j + 1, c)));
      }
      window.advance(j);
    }
    result.residual_history.push_back(residual);
    std::swap(prev, next);
    if (residual < tol) {
      result.iterations = iter;
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NoConvergence("picard_solve: no convergence after " +
                            std::to_string(max_iter) + " sweeps (last residual " +
                            std::to_string(result.residual_history.back()) + ")",
                        result.residual_history.back());
  }

  // Package the converged state with its window surrogate like the Euler
  // solver would.
  result.output.state = prev;
  result.output.aux_v = Trajectory(grid, n, Span::Forward);
  result.output.regularized = regularized;
  result.output.k = k.value_or(0.0);
  if (regularized && problem.max_coupled) {
    result.output.window_cache.resize(static_cast<std::size_t>(M + 1) * n);
  }
  WindowEval window(problem, result.output.state, grid, regularized,
                    k.value_or(0.0),
                    result.output.has_window_cache() ? &result.output.window_cache
                                                     : nullptr);
  for (int j = 0; j <= M; ++j) {
    window.value_at(j, v);
    for (int c = 0; c < n; ++c) result.output.aux_v.at(j, c) = v[c];
    if (j < M) window.advance(j);
  }
  return result;
}

double integral_residual(const ProblemDefinition& problem, const Trajectory& state,
                         const Trajectory& control, std::optional<double> k) {
  const TimeGrid& grid = state.grid();
  check_setup(problem, control, grid);
  if (state.span() != Span::Full || state.dim() != problem.state_dim) {
    throw Error("integral_residual: state must span [-tau, T] with problem dim");
  }
  const bool regularized = k.has_value();
  const int n = problem.state_dim;
  const int H = grid.n_hist;

  WindowEval window(problem, state, grid, regularized, k.value_or(0.0), nullptr);
  RhsEval rhs(problem);
  Vector v(n), acc(n);
  for (int c = 0; c < n; ++c) acc[c] = state.at(H, c);

  double defect = 0.0;
  for (int j = 0; j < grid.n_fwd; ++j) {
    window.value_at(j, v);
    rhs(state, H + j, v, control, j);
    for (int c = 0; c < n; ++c) {
      acc[c] += grid.dt * rhs.rhs[c];
      defect = std::max(defect, std::abs(state.at(H + j + 1, c) - acc[c]));
    }
    window.advance(j);
  }
  return defect;
}

double integral_residual(const ProblemDefinition& problem,
                         const ForwardSolveOutput& output,
                         const Trajectory& control) {
  return integral_residual(problem, output.state, control,
                           output.regularized ? std::optional<double>(output.k)
                                              : std::nullopt);
}

}  // namespace supctrl
