#include "supctrl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace supctrl {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": cannot parse \"" + value +
                      "\" as a number");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": cannot parse \"" + value +
                      "\" as an integer");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key " + key + ": cannot parse \"" + value +
                    "\" as a boolean");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "problem.name") {
    cfg.problem = value;
  } else if (key == "problem.alpha") {
    cfg.overrides.alpha = parse_double(key, value);
  } else if (key == "problem.beta") {
    cfg.overrides.beta = parse_double(key, value);
  } else if (key == "problem.tau") {
    cfg.overrides.tau = parse_double(key, value);
  } else if (key == "problem.T") {
    cfg.overrides.horizon = parse_double(key, value);
  } else if (key == "problem.u_lo") {
    cfg.overrides.control_lower = parse_double(key, value);
  } else if (key == "problem.u_hi") {
    cfg.overrides.control_upper = parse_double(key, value);
  } else if (key == "run.dt") {
    cfg.dt = parse_double(key, value);
  } else if (key == "run.k") {
    cfg.k = parse_double(key, value);
  } else if (key == "run.out") {
    cfg.output_dir = value;
  } else if (key == "run.seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "run.emit_plots") {
    cfg.emit_plots = parse_bool(key, value);
  } else if (key == "run.paper_scale") {
    cfg.paper_scale = parse_bool(key, value);
  } else if (key == "optimizer.max_iters") {
    cfg.optimizer.max_iters = static_cast<int>(parse_int(key, value));
  } else if (key == "optimizer.armijo_c") {
    cfg.optimizer.armijo_c = parse_double(key, value);
  } else if (key == "optimizer.backtrack") {
    cfg.optimizer.backtrack = parse_double(key, value);
  } else if (key == "optimizer.step0") {
    cfg.optimizer.step0 = parse_double(key, value);
  } else if (key == "optimizer.tol") {
    cfg.optimizer.tol_stationarity = parse_double(key, value);
  } else if (key == "optimizer.min_step") {
    cfg.optimizer.min_step = parse_double(key, value);
  } else if (key == "optimizer.step_rule") {
    if (value == "spectral") {
      cfg.optimizer.step_rule = StepRule::spectral;
    } else if (value == "reset") {
      cfg.optimizer.step_rule = StepRule::reset;
    } else {
      throw ConfigError("optimizer.step_rule must be spectral or reset");
    }
  } else {
    throw ConfigError("unknown config key \"" + key + "\"");
  }
}

RunConfig load_config(const fs::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected key=value");
    }
    apply_config_entry(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

int sweep_thread_cap() {
  if (const char* env = std::getenv("SUPCTRL_THREADS")) {
    const long long v = parse_int("SUPCTRL_THREADS", env);
    if (v < 1) throw ConfigError("SUPCTRL_THREADS must be at least 1");
    return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << format_double(row[i]);
    }
    out << '\n';
  }
  if (!out.good()) throw IoError("write failed for " + path.string());
}

std::vector<std::vector<double>> read_csv(const fs::path& path,
                                          std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      first = false;
      if (header) {
        while (std::getline(ss, cell, ',')) header->push_back(cell);
      }
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::vector<std::string> solution_header(int n, int m) {
  std::vector<std::string> h;
  if (n == 1 && m == 1) return {"t", "u", "x", "lambda", "dlambda"};
  h.push_back("t");
  for (int c = 0; c < m; ++c) h.push_back("u_" + std::to_string(c + 1));
  for (int c = 0; c < n; ++c) h.push_back("x_" + std::to_string(c + 1));
  for (int c = 0; c < n; ++c) h.push_back("lambda_" + std::to_string(c + 1));
  for (int c = 0; c < n; ++c) h.push_back("dlambda_" + std::to_string(c + 1));
  return h;
}

void write_solution_csv(const fs::path& path, const SolveReport& report,
                        const TimeGrid& grid) {
  const int n = report.state.dim();
  const int m = report.control.dim();
  std::vector<std::vector<double>> rows;
  rows.reserve(grid.forward_node_count());
  for (int j = 0; j <= grid.n_fwd; ++j) {
    std::vector<double> row;
    row.push_back(grid.forward_time(j));
    for (int c = 0; c < m; ++c) row.push_back(report.control.at(j, c));
    for (int c = 0; c < n; ++c) row.push_back(report.state.at(grid.n_hist + j, c));
    for (int c = 0; c < n; ++c) row.push_back(report.adjoint.at(j, c));
    for (int c = 0; c < n; ++c) {
      const double d = j < grid.n_fwd
                           ? (report.adjoint.at(j + 1, c) - report.adjoint.at(j, c)) /
                                 grid.dt
                           : 0.0;
      row.push_back(d);
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, solution_header(n, m), rows);
}

void write_jumps_csv(const fs::path& path, const std::vector<JumpRecord>& jumps) {
  std::vector<std::vector<double>> rows;
  for (const auto& j : jumps) {
    rows.push_back({static_cast<double>(j.component + 1), j.time, j.magnitude,
                    j.predicted,
                    j.argmax_interval ? j.argmax_interval->first : j.time,
                    j.argmax_interval ? j.argmax_interval->second : j.time});
  }
  write_csv(path, {"component", "time", "magnitude", "predicted", "s1", "s2"}, rows);
}

void write_summary(const fs::path& path, const SolveReport& report,
                   const RunConfig& cfg, double dt, double k) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "problem            " << cfg.problem << '\n';
  out << "dt                 " << format_double(dt) << '\n';
  out << "k                  " << format_double(k) << '\n';
  out << "iterations         " << report.iterations << '\n';
  out << "termination        " << to_string(report.termination) << '\n';
  out << "objective          " << format_double(report.final_objective()) << '\n';
  out << "stationarity       " << format_double(report.final_stationarity()) << '\n';
  out << "detected jumps     " << report.jumps.size() << '\n';
  for (const auto& j : report.jumps) {
    out << "  component " << j.component + 1 << "  t = " << format_double(j.time)
        << "  magnitude = " << format_double(j.magnitude)
        << "  predicted = " << format_double(j.predicted);
    if (j.argmax_interval) {
      out << "  argmax interval = [" << format_double(j.argmax_interval->first)
          << ", " << format_double(j.argmax_interval->second) << "]";
    }
    out << '\n';
  }
  if (!out.good()) throw IoError("write failed for " + path.string());
}

// Linear interpolation of a forward-span control onto a finer grid whose
// step divides the coarse one.
Trajectory prolong_control(const Trajectory& coarse, const TimeGrid& fine) {
  const TimeGrid& cg = coarse.grid();
  const double ratio = cg.dt / fine.dt;
  const long long r = std::llround(ratio);
  if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-9) {
    throw Error("prolong_control: fine step must divide the coarse step");
  }
  Trajectory out(fine, coarse.dim(), Span::Forward);
  for (int j = 0; j <= fine.n_fwd; ++j) {
    const long long i = j / r;
    const long long rem = j % r;
    for (int c = 0; c < coarse.dim(); ++c) {
      if (rem == 0 || i + 1 > cg.n_fwd) {
        out.at(j, c) = coarse.at(static_cast<int>(std::min<long long>(i, cg.n_fwd)), c);
      } else {
        const double w = static_cast<double>(rem) / static_cast<double>(r);
        out.at(j, c) =
            (1.0 - w) * coarse.at(static_cast<int>(i), c) +
            w * coarse.at(static_cast<int>(i) + 1, c);
      }
    }
  }
  return out;
}

}  // namespace

Fig1Result run_fig1(const RunConfig& cfg) {
  const ProblemDefinition problem = build_problem(cfg.problem, cfg.overrides);
  const double dt = cfg.paper_scale ? 1e-4 : cfg.dt;
  const double k = cfg.paper_scale ? 1e6 : cfg.k;
  const TimeGrid grid = make_grid(problem.tau, problem.horizon, dt);

  Trajectory u0 = Trajectory::constant(grid, problem.control_dim, Span::Forward, 0.0);
  if (cfg.paper_scale) {
    // Grid continuation at the target sharpness: solve from zero on a
    // coarser grid first, then refine the interpolated control.  k stays
    // fixed because the optimizer's resting point (in particular the
    // location of the flat second state maximum) depends on k itself.
    const double coarse_dt = 1e-3;
    const long long r = std::llround(coarse_dt / dt);
    if (r >= 1 && std::abs(coarse_dt / dt - static_cast<double>(r)) < 1e-9) {
      const TimeGrid coarse_grid = make_grid(problem.tau, problem.horizon, coarse_dt);
      OptimizerConfig coarse_opt = cfg.optimizer;
      coarse_opt.tol_stationarity =
          std::max(coarse_opt.tol_stationarity, 1e-6);
      const SolveReport coarse = projected_gradient(
          problem, k, coarse_grid, coarse_opt,
          Trajectory::constant(coarse_grid, problem.control_dim, Span::Forward, 0.0));
      u0 = prolong_control(coarse.control, grid);
    }
  }

  SolveReport report = projected_gradient(problem, k, grid, cfg.optimizer, u0);

  Fig1Result result;
  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  result.solution_csv = out_dir / "solution.csv";
  result.jumps_csv = out_dir / "jumps.csv";
  result.summary_txt = out_dir / "summary.txt";
  write_solution_csv(result.solution_csv, report, grid);
  write_jumps_csv(result.jumps_csv, report.jumps);
  write_summary(result.summary_txt, report, cfg, dt, k);
  if (cfg.emit_plots) result.plot_script = emit_plot_script(report, out_dir);
  result.report = std::move(report);
  return result;
}

std::vector<NonexistenceRow> run_nonexistence(const RunConfig& cfg,
                                              const std::vector<double>& frequencies) {
  if (cfg.problem != "nonexistence_demo") {
    throw ConfigError("run_nonexistence requires problem.name=nonexistence_demo");
  }
  const ProblemDefinition problem = build_problem(cfg.problem, cfg.overrides);
  const TimeGrid grid = make_grid(problem.tau, problem.horizon, cfg.dt);

  std::vector<NonexistenceRow> rows;
  for (const double freq : frequencies) {
    Trajectory u = Trajectory::sampled(
        grid, problem.control_dim, Span::Forward, [freq](double t, int) {
          const double s = std::sin(freq * t);
          return 1.0 + 2.0 * (s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0));
        });
    const ForwardSolveOutput out = integrate_hardmax(problem, u, grid);
    rows.push_back({freq, evaluate_objective(problem, out, u)});
  }

  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  std::vector<std::vector<double>> table;
  for (const auto& r : rows) table.push_back({r.frequency, r.objective});
  write_csv(out_dir / "nonexistence.csv", {"frequency", "objective"}, table);

  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].objective > 1.0)) {
      throw AssertionFailure(
          "nonexistence: objective at frequency " + format_double(rows[i].frequency) +
          " is " + format_double(rows[i].objective) +
          ", at or below the infimal value 1");
    }
    if (i > 0 && !(rows[i].objective < rows[i - 1].objective)) {
      throw AssertionFailure("nonexistence: objectives do not decrease between "
                             "frequencies " +
                             format_double(rows[i - 1].frequency) + " and " +
                             format_double(rows[i].frequency));
    }
  }
  return rows;
}

std::vector<KConvergenceRow> run_k_convergence(const RunConfig& cfg,
                                               const std::vector<double>& k_list) {
  const ProblemDefinition problem = build_problem(cfg.problem, cfg.overrides);
  if (!problem.max_coupled) {
    throw ConfigError("run_k_convergence needs a problem that couples to the window max");
  }
  const TimeGrid grid = make_grid(problem.tau, problem.horizon, cfg.dt);
  const Trajectory control = project_box(
      Trajectory::sampled(grid, problem.control_dim, Span::Forward,
                          [](double t, int) { return std::sin(3.0 * t); }),
      problem.control_lower, problem.control_upper);

  const ForwardSolveOutput hard = integrate_hardmax(problem, control, grid);

  std::vector<KConvergenceRow> rows(k_list.size());
  std::vector<std::exception_ptr> errors(k_list.size());
  const int threads =
      std::clamp<int>(sweep_thread_cap(), 1, static_cast<int>(k_list.size()));

  auto worker = [&](int start) {
    for (std::size_t i = start; i < k_list.size(); i += threads) {
      try {
        const double k = k_list[i];
        const ForwardSolveOutput reg =
            integrate_regularized(problem, control, k, grid, false);
        double state_gap = 0.0;
        for (int j = 0; j <= grid.n_fwd; ++j) {
          for (int c = 0; c < problem.state_dim; ++c) {
            state_gap = std::max(state_gap,
                                 std::abs(reg.state.at(grid.n_hist + j, c) -
                                          hard.state.at(grid.n_hist + j, c)));
          }
        }
        // L1 distance between hard and smooth window maxima along the
        // hard-max trajectory.
        double l1 = 0.0;
        const double* base = hard.state.values().data();
        for (int j = 0; j < grid.n_fwd; ++j) {
          for (int c = 0; c < problem.state_dim; ++c) {
            const auto st = detail::scan_window(
                base + static_cast<std::size_t>(j) * problem.state_dim + c,
                grid.n_hist, problem.state_dim, k);
            const double lie = st.wmax + std::log(grid.dt * st.shifted_sum) / k;
            l1 += grid.dt * std::abs(st.wmax - lie);
          }
        }
        rows[i] = {k, state_gap, l1};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  if (threads > 1) {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  } else {
    worker(0);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  std::vector<std::vector<double>> table;
  for (const auto& r : rows) table.push_back({r.k, r.state_gap, r.lie_l1_gap});
  write_csv(out_dir / "kconv.csv", {"k", "state_gap", "lie_l1_gap"}, table);

  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].state_gap < rows[i - 1].state_gap)) {
      throw AssertionFailure("kconv: state gap did not decrease from k = " +
                             format_double(rows[i - 1].k) + " to k = " +
                             format_double(rows[i].k));
    }
    if (!(rows[i].lie_l1_gap < rows[i - 1].lie_l1_gap)) {
      throw AssertionFailure("kconv: L1 smooth-max gap did not decrease from k = " +
                             format_double(rows[i - 1].k) + " to k = " +
                             format_double(rows[i].k));
    }
  }
  return rows;
}

std::vector<GradCheckRow> run_gradient_check(const RunConfig& cfg, int count) {
  const ProblemDefinition problem = build_problem(cfg.problem, cfg.overrides);
  const TimeGrid grid = make_grid(problem.tau, problem.horizon, cfg.dt);
  const double h = 1e-5;

  std::mt19937_64 rng(cfg.seed == 0 ? 0x5eedULL : cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<GradCheckRow> rows;
  Trajectory u(grid, problem.control_dim, Span::Forward);
  Trajectory du(grid, problem.control_dim, Span::Forward);
  for (int trial = 0; trial < count; ++trial) {
    for (int j = 0; j <= grid.n_fwd; ++j) {
      for (int c = 0; c < problem.control_dim; ++c) {
        const double lo = problem.control_lower[c];
        const double hi = problem.control_upper[c];
        u.at(j, c) = lo + (0.5 + 0.5 * unit(rng)) * (hi - lo);
        du.at(j, c) = unit(rng);
      }
    }
    const GradientResult g = reduced_gradient(problem, u, cfg.k, grid);
    double directional = 0.0;
    for (int j = 0; j <= grid.n_fwd; ++j) {
      for (int c = 0; c < problem.control_dim; ++c) {
        directional += grid.dt * g.gradient.at(j, c) * du.at(j, c);
      }
    }
    Trajectory up = u;
    Trajectory um = u;
    for (std::size_t i = 0; i < u.values().size(); ++i) {
      up.values()[i] += h * du.values()[i];
      um.values()[i] -= h * du.values()[i];
    }
    const double jp = evaluate_objective(
        problem, integrate_regularized(problem, up, cfg.k, grid, false), up);
    const double jm = evaluate_objective(
        problem, integrate_regularized(problem, um, cfg.k, grid, false), um);
    const double fd = (jp - jm) / (2.0 * h);
    const double rel =
        std::abs(fd - directional) /
        std::max({std::abs(fd), std::abs(directional), 1e-12});
    rows.push_back({fd, directional, rel});
  }

  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  std::vector<std::vector<double>> table;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table.push_back({static_cast<double>(i), rows[i].directional_fd,
                     rows[i].directional_adjoint, rows[i].rel_err});
  }
  write_csv(out_dir / "gradcheck.csv",
            {"trial", "directional_fd", "directional_adjoint", "rel_err"}, table);

  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].rel_err < 1e-6)) {
      throw AssertionFailure("gradcheck: trial " + std::to_string(i) +
                             " relative error " + format_double(rows[i].rel_err) +
                             " exceeds 1e-6");
    }
  }
  return rows;
}

std::filesystem::path emit_plot_script(const SolveReport& report,
                                       const fs::path& output_dir) {
  std::ostringstream s;
  s << "# four-panel rendering of solution.csv (run: gnuplot plot.gp)\n"
       "set datafile separator ','\n"
       "set terminal pngcairo size 1200,850\n"
       "set output 'fig1_panels.png'\n"
       "set multiplot layout 2,2\n"
       "set grid\n"
       "set xlabel 't'\n";
  s << "set title 'control u'\n"
       "plot 'solution.csv' every ::1 using 1:2 with lines lw 2 lc rgb '#1f77b4' "
       "notitle\n";
  s << "set title 'state x'\n"
       "plot 'solution.csv' every ::1 using 1:3 with lines lw 2 lc rgb '#2ca02c' "
       "notitle\n";
  if (!report.jumps.empty()) {
    int id = 1;
    for (const auto& j : report.jumps) {
      s << "set arrow " << id++ << " from " << format_double(j.time)
        << ", graph 0 to " << format_double(j.time)
        << ", graph 1 nohead dt 2 lc rgb '#d62728'\n";
    }
  }
  s << "set title 'adjoint lambda'\n"
       "plot 'solution.csv' every ::1 using 1:4 with lines lw 2 lc rgb '#ff7f0e' "
       "notitle\n";
  s << "set title 'adjoint rate dlambda'\n"
       "plot 'solution.csv' every ::1 using 1:5 with lines lw 2 lc rgb '#9467bd' "
       "notitle\n";
  if (!report.jumps.empty()) s << "unset arrow\n";
  s << "unset multiplot\n";

  const fs::path path = output_dir / "plot.gp";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << s.str();
  if (!out.good()) throw IoError("write failed for " + path.string());
  return path;
}

}  // namespace supctrl
