#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "supctrl/errors.hpp"
#include "supctrl/optimize.hpp"

namespace supctrl {

// Thrown when an experiment's built-in consistency assertion fails (the CLI
// maps it to exit code 2).
struct AssertionFailure : Error {
  using Error::Error;
};

// One experiment run: which problem, at which resolution and sharpness,
// where results go.  Loadable from a flat key=value file with dotted
// sections (problem.alpha=100); CLI flags override file values.
struct RunConfig {
  std::string problem = "fig1_tracking";
  ProblemOverrides overrides;
  double dt = 1e-3;
  double k = 1e4;
  OptimizerConfig optimizer;
  std::string output_dir = "out";
  bool emit_plots = true;
  std::uint64_t seed = 0;
  bool paper_scale = false;  // dt = 1e-4, k = 1e6 with a coarse warm start
};

RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& value);

// Tracking experiment: optimize from u = 0, write solution.csv / jumps.csv /
// summary.txt (and plot.gp unless disabled) into the output directory.
// Paper-scale runs keep k = 1e6 but warm-start from a coarser grid before
// refining at dt = 1e-4.
struct Fig1Result {
  SolveReport report;
  std::filesystem::path solution_csv;
  std::filesystem::path jumps_csv;
  std::filesystem::path summary_txt;
  std::filesystem::path plot_script;  // empty when plots disabled
};
Fig1Result run_fig1(const RunConfig& config);

// Simulates the bang-bang controls u(t) = 1 + 2 sign(sin(freq t)) through the
// x' = |u| plant and tabulates their objectives.  Writes nonexistence.csv,
// then asserts every objective exceeds 1 and that the sequence decreases
// (the infimal value 1 is approached but never attained).
struct NonexistenceRow {
  double frequency = 0.0;
  double objective = 0.0;
};
std::vector<NonexistenceRow> run_nonexistence(const RunConfig& config,
                                              const std::vector<double>& frequencies);

// Fixed-control sharpness sweep: for each k, the sup gap between the
// regularized and hard-max states and the L1 gap between the smooth and hard
// window maxima along the hard trajectory.  Writes kconv.csv, then asserts
// both columns decrease strictly.  Member solves may run concurrently,
// capped by SUPCTRL_THREADS.
struct KConvergenceRow {
  double k = 0.0;
  double state_gap = 0.0;
  double lie_l1_gap = 0.0;
};
std::vector<KConvergenceRow> run_k_convergence(const RunConfig& config,
                                               const std::vector<double>& k_list);

// Central-difference probes of the adjoint gradient in random directions;
// writes gradcheck.csv and asserts every relative error is below 1e-6.
struct GradCheckRow {
  double directional_fd = 0.0;
  double directional_adjoint = 0.0;
  double rel_err = 0.0;
};
std::vector<GradCheckRow> run_gradient_check(const RunConfig& config, int count);

// Self-contained gnuplot script with four panels (u, x, lambda, dlambda)
// reading solution.csv; jump markers only when jumps were detected.  Output
// bytes are a pure function of the report.
std::filesystem::path emit_plot_script(const SolveReport& report,
                                       const std::filesystem::path& output_dir);

// Parallelism cap for sweep runners: SUPCTRL_THREADS when set, otherwise the
// hardware concurrency.
int sweep_thread_cap();

// CSV helpers (17 significant digits, lossless for doubles).
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                          std::vector<std::string>* header = nullptr);

}  // namespace supctrl
