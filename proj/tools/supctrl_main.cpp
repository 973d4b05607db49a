#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "supctrl/experiments.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  double dt = 0.0;
  double k = 0.0;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool paper_scale = false;
  bool no_plots = false;
};

// Config file first, explicit flags on top.
supctrl::RunConfig resolve(const CLI::App* cmd, const CliOptions& opt,
                           supctrl::RunConfig cfg) {
  if (cmd->count("--config")) cfg = supctrl::load_config(opt.config_path, cfg);
  if (cmd->count("--dt")) cfg.dt = opt.dt;
  if (cmd->count("--k")) cfg.k = opt.k;
  if (cmd->count("--out")) cfg.output_dir = opt.out_dir;
  if (cmd->count("--seed")) cfg.seed = opt.seed;
  if (cmd->count("--paper-scale")) cfg.paper_scale = opt.paper_scale;
  if (cmd->count("--no-plots")) cfg.emit_plots = !opt.no_plots;
  return cfg;
}

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_path, "key=value config file");
  cmd->add_option("--dt", opt.dt, "time step");
  cmd->add_option("--k", opt.k, "smooth-max sharpness");
  cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_option("--seed", opt.seed, "seed for randomized runs");
  cmd->add_flag("--paper-scale", opt.paper_scale,
                "run at dt = 1e-4, k = 1e6 (roughly 10x the runtime)");
  cmd->add_flag("--no-plots", opt.no_plots, "skip plot script emission");
}

int run_fig1_cmd(const supctrl::RunConfig& cfg) {
  const supctrl::Fig1Result result = supctrl::run_fig1(cfg);
  const auto& r = result.report;
  std::printf("termination   %s after %d iterations\n",
              supctrl::to_string(r.termination), r.iterations);
  std::printf("objective     %.12g\n", r.final_objective());
  std::printf("stationarity  %.3e\n", r.final_stationarity());
  std::printf("jumps         %zu\n", r.jumps.size());
  for (const auto& j : r.jumps) {
    std::printf("  component %d  t = %.4f  magnitude = %+.6f  predicted = %+.6f\n",
                j.component + 1, j.time, j.magnitude, j.predicted);
  }
  std::printf("wrote %s\n", result.solution_csv.string().c_str());
  return r.termination == supctrl::Termination::Converged ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal control of ODEs driven by trailing-window state maxima"};
  app.require_subcommand(1);

  CliOptions opt;

  CLI::App* fig1 = app.add_subcommand(
      "fig1", "optimize the tracking problem and dump solution/jump tables");
  add_common_flags(fig1, opt);

  CLI::App* nonex = app.add_subcommand(
      "nonexistence", "objective decay of the minimizing bang-bang sequence");
  add_common_flags(nonex, opt);
  std::vector<double> freqs = {10.0, 100.0, 1000.0, 10000.0};
  nonex->add_option("--freqs", freqs, "switching frequencies")->delimiter(',');

  CLI::App* kconv = app.add_subcommand(
      "kconv", "sharpness sweep: regularized vs hard-max states");
  add_common_flags(kconv, opt);
  std::vector<double> k_list = {10.0, 100.0, 1000.0, 10000.0};
  kconv->add_option("--k-list", k_list, "sharpness values")->delimiter(',');

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference probes of the adjoint gradient");
  add_common_flags(gradcheck, opt);
  int count = 20;
  gradcheck->add_option("--count", count, "number of random directions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fig1->parsed()) {
      return run_fig1_cmd(resolve(fig1, opt, supctrl::RunConfig{}));
    }
    if (nonex->parsed()) {
      supctrl::RunConfig defaults;
      defaults.problem = "nonexistence_demo";
      defaults.dt = 1e-5;  // resolves the fastest default switching frequency
      const auto rows = supctrl::run_nonexistence(resolve(nonex, opt, defaults), freqs);
      std::printf("%-12s %s\n", "frequency", "objective");
      for (const auto& r : rows) {
        std::printf("%-12g %.10f\n", r.frequency, r.objective);
      }
      std::printf("all objectives above the infimal value 1, decreasing\n");
      return 0;
    }
    if (kconv->parsed()) {
      const auto rows =
          supctrl::run_k_convergence(resolve(kconv, opt, supctrl::RunConfig{}), k_list);
      std::printf("%-12s %-14s %s\n", "k", "state_gap", "lie_l1_gap");
      for (const auto& r : rows) {
        std::printf("%-12g %-14.6e %.6e\n", r.k, r.state_gap, r.lie_l1_gap);
      }
      std::printf("both gaps decrease strictly with k\n");
      return 0;
    }
    if (gradcheck->parsed()) {
      supctrl::RunConfig defaults;
      defaults.dt = 1e-2;
      defaults.k = 1e3;
      const auto rows =
          supctrl::run_gradient_check(resolve(gradcheck, opt, defaults), count);
      double worst = 0.0;
      for (const auto& r : rows) worst = std::max(worst, r.rel_err);
      std::printf("%d directional derivatives checked, worst relative error %.3e\n",
                  static_cast<int>(rows.size()), worst);
      return 0;
    }
  } catch (const supctrl::AssertionFailure& e) {
    std::cerr << "assertion failure: " << e.what() << '\n';
    return 2;
  } catch (const supctrl::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
