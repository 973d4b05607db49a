#include "supctrl/adjoint.hpp"

#include <algorithm>
#include <cmath>

#include "supctrl/errors.hpp"

namespace supctrl {

namespace {

void check_differentiable(const ProblemDefinition& p) {
  if (p.has_plant_control_map()) {
    throw Error("adjoint/gradient machinery requires an identity plant control map");
  }
}

// Window statistics per (forward node, component): cached ones when they are
// valid for this k, otherwise rescanned from the stored state.
std::vector<detail::WindowStats> window_stats_for(const ForwardSolveOutput& fwd,
                                                  const TimeGrid& grid, int n,
                                                  double k) {
  if (fwd.has_window_cache() && fwd.k == k) return fwd.window_cache;
  const int M = grid.n_fwd;
  std::vector<detail::WindowStats> stats(static_cast<std::size_t>(M + 1) * n);
  const double* base = fwd.state.values().data();
  for (int j = 0; j <= M; ++j) {
    for (int c = 0; c < n; ++c) {
      stats[static_cast<std::size_t>(j) * n + c] =
          detail::scan_window(base + static_cast<std::size_t>(j) * n + c,
                              grid.n_hist, n, k);
    }
  }
  return stats;
}

struct LinearizationEval {
  explicit LinearizationEval(const ProblemDefinition& p)
      : problem(p),
        x(p.state_dim),
        v(p.state_dim),
        u(p.control_dim),
        phi_x(p.state_dim, p.state_dim),
        f_y(p.state_dim, p.state_dim),
        tmp(p.state_dim, p.state_dim) {}

  void load(const ForwardSolveOutput& fwd, const Trajectory& control,
            const TimeGrid& grid, int j) {
    for (int c = 0; c < problem.state_dim; ++c) {
      x[c] = fwd.state.at(grid.n_hist + j, c);
      v[c] = fwd.aux_v.at(j, c);
    }
    for (int c = 0; c < problem.control_dim; ++c) u[c] = control.at(j, c);
  }

  void jacobians() {
    problem.f0_x(x, v, phi_x);
    problem.f1u_x(x, v, u, tmp);
    phi_x += tmp;
    problem.f0_y(x, v, f_y);
    problem.f1u_y(x, v, u, tmp);
    f_y += tmp;
  }

  const ProblemDefinition& problem;
  Vector x, v, u;
  Matrix phi_x, f_y, tmp;
};

}  // namespace

AdjointOutput solve_discrete_adjoint(const ProblemDefinition& problem,
                                     const ForwardSolveOutput& fwd,
                                     const Trajectory& control,
                                     std::optional<double> k,
                                     const TimeGrid& grid) {
  check_differentiable(problem);
  if (!(fwd.state.grid() == grid) || control.node_count() != grid.forward_node_count() ||
      control.dim() != problem.control_dim) {
    throw Error("adjoint: forward solve, control and grid do not match");
  }
  if (!k.has_value()) {
    if (!fwd.regularized) {
      throw MissingWeights(
          "adjoint needs smooth-max weights: pass k or a regularized forward solve");
    }
    k = fwd.k;
  }

  const int n = problem.state_dim;
  const int H = grid.n_hist;
  const int M = grid.n_fwd;
  const double dt = grid.dt;

  const bool coupled = problem.max_coupled;
  std::vector<detail::WindowStats> stats;
  if (coupled) stats = window_stats_for(fwd, grid, n, *k);

  AdjointOutput out;
  out.lambda = Trajectory(grid, n, Span::Forward);
  out.dlambda = Trajectory(grid, n, Span::Forward);

  // Delayed contributions scattered ahead of the sweep; slot j collects the
  // terms every later step's window owes to node j.
  std::vector<double> accum(static_cast<std::size_t>(M + 1) * n, 0.0);

  Vector lambda_next(n), psi(n);
  RowVector jx(n), gx(n);
  LinearizationEval lin(problem);
  const double* sdata = fwd.state.values().data();

  if (problem.has_terminal_cost()) {
    if (!problem.terminal_cost_x) {
      throw Error("terminal cost present but its gradient hook is missing");
    }
    for (int c = 0; c < n; ++c) lin.x[c] = fwd.state.at(H + M, c);
    problem.terminal_cost_x(lin.x, gx);
    for (int c = 0; c < n; ++c) out.lambda.at(M, c) = -gx[c];
  }
  for (int c = 0; c < n; ++c) lambda_next[c] = out.lambda.at(M, c);

  for (int j = M - 1; j >= 0; --j) {
    lin.load(fwd, control, grid, j);
    lin.jacobians();

    if (coupled) {
      // Scatter step j's window sensitivity: each window sample i of this
      // step receives dt^2 * (F_y^T lambda_{j+1})_c * weight_{j}[i][c], with
      // dt * weight = exp(k (x_i - wmax)) / shifted_sum.
      psi.noalias() = dt * (lin.f_y.transpose() * lambda_next);
      for (int c = 0; c < n; ++c) {
        if (psi[c] == 0.0) continue;
        const auto& st = stats[static_cast<std::size_t>(j) * n + c];
        const double scale = psi[c] / st.shifted_sum;
        const double floor = st.wmax + detail::kNegligibleExponent / *k;
        // Window of forward node j = grid nodes [j, H+j-1]; forward node
        // indices i = gi - H >= 0 are the differentiable ones.
        for (int gi = std::max(j, H); gi <= H + j - 1; ++gi) {
          const double v = sdata[static_cast<std::size_t>(gi) * n + c];
          if (v < floor) continue;
          accum[static_cast<std::size_t>(gi - H) * n + c] +=
              scale * std::exp((*k) * (v - st.wmax));
        }
      }
    }

    problem.running_cost_x(grid.forward_time(j), lin.x, lin.u, jx);
    for (int c = 0; c < n; ++c) {
      double val = lambda_next[c] + accum[static_cast<std::size_t>(j) * n + c] -
                   dt * jx[c];
      for (int r = 0; r < n; ++r) {
        val += dt * lin.phi_x(r, c) * lambda_next[r];
      }
      out.lambda.at(j, c) = val;
    }
    for (int c = 0; c < n; ++c) lambda_next[c] = out.lambda.at(j, c);
  }

  if (!out.lambda.all_finite()) {
    throw NonFinite("adjoint state became non-finite");
  }
  for (int j = 0; j < M; ++j) {
    for (int c = 0; c < n; ++c) {
      out.dlambda.at(j, c) = (out.lambda.at(j + 1, c) - out.lambda.at(j, c)) / dt;
    }
  }
  return out;
}

GradientResult reduced_gradient(const ProblemDefinition& problem,
                                const Trajectory& control, double k,
                                const TimeGrid& grid) {
  return reduced_gradient(problem, control, k, grid,
                          integrate_regularized(problem, control, k, grid, true));
}

GradientResult reduced_gradient(const ProblemDefinition& problem,
                                const Trajectory& control, double k,
                                const TimeGrid& grid, ForwardSolveOutput forward) {
  check_differentiable(problem);
  GradientResult result;
  result.forward = std::move(forward);
  result.objective = evaluate_objective(problem, result.forward, control);
  result.adjoint =
      solve_discrete_adjoint(problem, result.forward, control, k, grid);

  const int n = problem.state_dim;
  const int m = problem.control_dim;
  result.gradient = Trajectory(grid, m, Span::Forward);

  Vector x(n), v(n), u(m), lam(n);
  RowVector ju(m);
  Matrix f1m(n, m);
  for (int j = 0; j < grid.n_fwd; ++j) {
    for (int c = 0; c < n; ++c) {
      x[c] = result.forward.state.at(grid.n_hist + j, c);
      v[c] = result.forward.aux_v.at(j, c);
      lam[c] = result.adjoint.lambda.at(j + 1, c);
    }
    for (int c = 0; c < m; ++c) u[c] = control.at(j, c);
    problem.running_cost_u(grid.forward_time(j), x, u, ju);
    problem.f1(x, v, f1m);
    for (int c = 0; c < m; ++c) {
      result.gradient.at(j, c) = ju[c] - f1m.col(c).dot(lam);
    }
  }
  return result;
}

double optimality_residual(const ProblemDefinition& problem,
                           const Trajectory& control, const Trajectory& gradient) {
  double res = 0.0;
  for (int j = 0; j < control.node_count(); ++j) {
    for (int c = 0; c < problem.control_dim; ++c) {
      const double u = control.at(j, c);
      const double stepped = std::clamp(u - gradient.at(j, c),
                                        problem.control_lower[c],
                                        problem.control_upper[c]);
      res = std::max(res, std::abs(u - stepped));
    }
  }
  return res;
}

double optimality_residual(const ProblemDefinition& problem,
                           const Trajectory& control, double k,
                           const TimeGrid& grid) {
  const GradientResult g = reduced_gradient(problem, control, k, grid);
  return optimality_residual(problem, control, g.gradient);
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

// True when the window of forward node j attains its maximum at grid node
// `target` and nowhere else (no second sample within the tie tolerance).
bool unique_argmax_at(const Trajectory& state, const TimeGrid& grid, int j,
                      int comp, int target) {
  const int lo = j;                     // grid window [j, n_hist + j - 1]
  const int hi = grid.n_hist + j - 1;
  double wmax = state.at(lo, comp);
  for (int gi = lo + 1; gi <= hi; ++gi) wmax = std::max(wmax, state.at(gi, comp));
  const double tol = 1e-9 * (1.0 + std::abs(wmax));
  if (state.at(target, comp) < wmax) return false;
  for (int gi = lo; gi <= hi; ++gi) {
    if (gi != target && state.at(gi, comp) > wmax - tol) return false;
  }
  return true;
}

}  // namespace

namespace {

// Least-squares line through lambda over the node range [lo, hi], evaluated
// at node `at` (times measured in nodes; only differences matter).
double fitted_lambda(const Trajectory& lambda, int comp, int lo, int hi, int at) {
  const int n = hi - lo + 1;
  if (n <= 1) return lambda.at(std::clamp(at, lo, hi), comp);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int j = lo; j <= hi; ++j) {
    const double x = j - lo;
    const double y = lambda.at(j, comp);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double det = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / n;
  return intercept + slope * (at - lo);
}

}  // namespace

std::vector<JumpRecord> detect_jumps(const AdjointOutput& adj,
                                     const ForwardSolveOutput& fwd,
                                     const Trajectory& control,
                                     const ProblemDefinition& problem,
                                     const TimeGrid& grid,
                                     double spike_threshold) {
  const int n = problem.state_dim;
  const int H = grid.n_hist;
  const int M = grid.n_fwd;
  // Clusters of flagged nodes separated by short lulls are one transition;
  // a fraction of the window keeps one steep ramp from splitting in two.
  const int merge_gap = std::max(3, grid.n_hist / 8);

  LinearizationEval lin(problem);
  std::vector<JumpRecord> records;

  for (int comp = 0; comp < n; ++comp) {
    std::vector<double> rate(M);
    for (int j = 0; j < M; ++j) rate[j] = adj.dlambda.at(j, comp);
    std::vector<double> mag(M);
    for (int j = 0; j < M; ++j) mag[j] = std::abs(rate[j]);
    const double med = median(mag);
    const double threshold = spike_threshold * med;

    int j = 0;
    while (j < M) {
      if (!(mag[j] > threshold && mag[j] > 0.0)) {
        ++j;
        continue;
      }
      int last = j;
      int probe = j + 1;
      while (probe < M && probe - last <= merge_gap) {
        if (mag[probe] > threshold) last = probe;
        ++probe;
      }
      const int cluster_start = j;
      const int cluster_end = last;
      j = last + 1;

      // The jump sits at a strict local max of the state; search a slightly
      // padded neighbourhood of the spike cluster.
      const int pad = 5;
      int peak = std::max(0, cluster_start - pad);
      for (int node = peak; node <= std::min(M, cluster_end + 1 + pad); ++node) {
        if (fwd.state.at(H + node, comp) > fwd.state.at(H + peak, comp)) {
          peak = node;
        }
      }

      // Interval of times whose window max is attained uniquely at the peak.
      // Steep-but-smooth stretches of the adjoint (strong running-cost
      // forcing, the terminal layer) have no such interval and are not
      // jumps.
      int run_start = -1;
      int run_end = -1;
      for (int jj = peak + 1; jj <= std::min(peak + grid.n_hist, M); ++jj) {
        if (unique_argmax_at(fwd.state, grid, jj, comp, H + peak)) {
          if (run_start < 0) run_start = jj;
          run_end = jj;
        } else if (run_start >= 0) {
          break;
        }
      }
      if (run_start < 0) continue;

      JumpRecord rec;
      rec.component = comp;
      rec.time = grid.forward_time(peak);
      rec.argmax_interval = {grid.forward_time(run_start),
                             grid.forward_time(run_end)};

      // The finite-k jump is a steep ramp riding on a smooth background.
      // Take the ramp support as the contiguous run, around the strongest
      // excess over the cluster-edge baseline, where the excess stays above
      // a tenth of its peak; then difference one-sided linear fits of
      // lambda extrapolated to the peak time.
      {
        const int c0 = std::max(cluster_start - 1, 0);
        const int c1 = std::min(cluster_end + 1, M - 1);
        auto baseline = [&](int jj) {
          if (c1 == c0) return rate[c0];
          const double w = static_cast<double>(jj - c0) / (c1 - c0);
          return (1.0 - w) * rate[c0] + w * rate[c1];
        };
        int core = c0;
        double core_excess = 0.0;
        for (int jj = c0; jj <= c1; ++jj) {
          const double e = std::abs(rate[jj] - baseline(jj));
          if (e > core_excess) {
            core_excess = e;
            core = jj;
          }
        }
        int band_lo = core;
        int band_hi = core;
        while (band_lo > c0 &&
               std::abs(rate[band_lo - 1] - baseline(band_lo - 1)) >=
                   0.1 * core_excess) {
          --band_lo;
        }
        while (band_hi < c1 &&
               std::abs(rate[band_hi + 1] - baseline(band_hi + 1)) >=
                   0.1 * core_excess) {
          ++band_hi;
        }
        band_lo = std::max(band_lo - 2, 0);
        band_hi = std::min(band_hi + 2, M - 1);
        const int fit = std::max(8, band_hi - band_lo + 1);
        const int left_hi = std::max(band_lo - 1, 0);
        const int left_lo = std::max(left_hi - fit + 1, 0);
        const int right_lo = std::min(band_hi + 2, M);
        const int right_hi = std::min(right_lo + fit - 1, M);
        const double left_limit =
            fitted_lambda(adj.lambda, comp, left_lo, left_hi, peak);
        const double right_limit =
            fitted_lambda(adj.lambda, comp, right_lo, right_hi, peak);
        rec.magnitude = right_limit - left_limit;
      }

      // The delayed adjoint term integrates the weight density against
      // lambda^T F_y; collapsing the density onto the peak gives the jump
      //   lambda(s0+) - lambda(s0-) = - int_{s1}^{s2} lambda^T F_y e_i dt.
      double quad = 0.0;
      for (int jj = run_start; jj <= run_end; ++jj) {
        if (jj >= M) break;  // linearization needs a step at jj
        lin.load(fwd, control, grid, jj);
        lin.jacobians();
        double lam_fy = 0.0;
        for (int r = 0; r < n; ++r) {
          lam_fy += adj.lambda.at(jj, r) * lin.f_y(r, comp);
        }
        quad += grid.dt * lam_fy;
      }
      rec.predicted = -quad;

      records.push_back(rec);
    }
  }
  return records;
}

}  // namespace supctrl
