#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "supctrl/experiments.hpp"

namespace py = pybind11;
using namespace supctrl;

namespace {

py::array_t<double> trajectory_array(const Trajectory& t) {
  py::array_t<double> out({t.node_count(), t.dim()});
  auto buf = out.mutable_unchecked<2>();
  for (int j = 0; j < t.node_count(); ++j) {
    for (int c = 0; c < t.dim(); ++c) buf(j, c) = t.at(j, c);
  }
  return out;
}

py::array_t<double> trajectory_times(const Trajectory& t) {
  py::array_t<double> out(t.node_count());
  auto buf = out.mutable_unchecked<1>();
  for (int j = 0; j < t.node_count(); ++j) buf(j) = t.time(j);
  return out;
}

// Accepts (nodes,), (nodes, dim) arrays or a scalar broadcast over all nodes.
Trajectory control_from_python(const TimeGrid& grid, int dim, py::handle obj) {
  Trajectory u(grid, dim, Span::Forward);
  if (py::isinstance<py::float_>(obj) || py::isinstance<py::int_>(obj)) {
    u.fill(obj.cast<double>());
    return u;
  }
  auto arr = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(
      obj.cast<py::object>());
  if (!arr) throw py::type_error("control must be a scalar or an array");
  const int nodes = grid.forward_node_count();
  if (arr.ndim() == 1) {
    if (dim != 1 || arr.shape(0) != nodes) {
      throw py::value_error("control array must have one value per forward node");
    }
    auto buf = arr.unchecked<1>();
    for (int j = 0; j < nodes; ++j) u.at(j, 0) = buf(j);
  } else if (arr.ndim() == 2) {
    if (arr.shape(0) != nodes || arr.shape(1) != dim) {
      throw py::value_error("control array must be (forward nodes, control dim)");
    }
    auto buf = arr.unchecked<2>();
    for (int j = 0; j < nodes; ++j) {
      for (int c = 0; c < dim; ++c) u.at(j, c) = buf(j, c);
    }
  } else {
    throw py::value_error("control array must be 1- or 2-dimensional");
  }
  return u;
}

ProblemOverrides overrides_from_kwargs(std::optional<double> alpha,
                                       std::optional<double> beta,
                                       std::optional<double> tau,
                                       std::optional<double> horizon,
                                       std::optional<double> u_lo,
                                       std::optional<double> u_hi) {
  ProblemOverrides ov;
  ov.alpha = alpha;
  ov.beta = beta;
  ov.tau = tau;
  ov.horizon = horizon;
  ov.control_lower = u_lo;
  ov.control_upper = u_hi;
  return ov;
}

}  // namespace

PYBIND11_MODULE(supctrl, m) {
  m.doc() = "Optimal control of ODEs driven by trailing-window state maxima";

  py::register_exception<Error>(m, "SupctrlError");

  py::class_<TimeGrid>(m, "TimeGrid")
      .def_readonly("tau", &TimeGrid::tau)
      .def_readonly("T", &TimeGrid::horizon)
      .def_readonly("dt", &TimeGrid::dt)
      .def_readonly("n_hist", &TimeGrid::n_hist)
      .def_readonly("n_fwd", &TimeGrid::n_fwd)
      .def("time", &TimeGrid::time)
      .def("__repr__", [](const TimeGrid& g) {
        return "TimeGrid(tau=" + std::to_string(g.tau) + ", T=" +
               std::to_string(g.horizon) + ", dt=" + std::to_string(g.dt) + ")";
      });

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("dim", &Trajectory::dim)
      .def_property_readonly("grid", &Trajectory::grid)
      .def("array", &trajectory_array)
      .def("times", &trajectory_times);

  py::class_<ProblemDefinition>(m, "Problem")
      .def_readonly("state_dim", &ProblemDefinition::state_dim)
      .def_readonly("control_dim", &ProblemDefinition::control_dim)
      .def_readonly("tau", &ProblemDefinition::tau)
      .def_readonly("T", &ProblemDefinition::horizon);

  py::class_<SmoothMaxResult>(m, "SmoothMaxResult")
      .def_readonly("value", &SmoothMaxResult::value)
      .def_readonly("weights", &SmoothMaxResult::weights)
      .def_readonly("k", &SmoothMaxResult::k);

  py::class_<ForwardSolveOutput>(m, "ForwardSolve")
      .def_readonly("state", &ForwardSolveOutput::state)
      .def_readonly("aux_v", &ForwardSolveOutput::aux_v)
      .def_readonly("regularized", &ForwardSolveOutput::regularized)
      .def_readonly("k", &ForwardSolveOutput::k);

  py::class_<AdjointOutput>(m, "Adjoint")
      .def_readonly("lam", &AdjointOutput::lambda)
      .def_readonly("dlam", &AdjointOutput::dlambda);

  py::class_<JumpRecord>(m, "JumpRecord")
      .def_readonly("component", &JumpRecord::component)
      .def_readonly("time", &JumpRecord::time)
      .def_readonly("magnitude", &JumpRecord::magnitude)
      .def_readonly("predicted", &JumpRecord::predicted)
      .def_readonly("argmax_interval", &JumpRecord::argmax_interval)
      .def("__repr__", [](const JumpRecord& j) {
        return "JumpRecord(t=" + std::to_string(j.time) +
               ", magnitude=" + std::to_string(j.magnitude) + ")";
      });

  py::enum_<StepRule>(m, "StepRule")
      .value("spectral", StepRule::spectral)
      .value("reset", StepRule::reset);

  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("max_iters", &OptimizerConfig::max_iters)
      .def_readwrite("armijo_c", &OptimizerConfig::armijo_c)
      .def_readwrite("backtrack", &OptimizerConfig::backtrack)
      .def_readwrite("step0", &OptimizerConfig::step0)
      .def_readwrite("tol_stationarity", &OptimizerConfig::tol_stationarity)
      .def_readwrite("min_step", &OptimizerConfig::min_step)
      .def_readwrite("step_rule", &OptimizerConfig::step_rule);

  py::enum_<Termination>(m, "Termination")
      .value("Converged", Termination::Converged)
      .value("MaxIters", Termination::MaxIters)
      .value("StepStall", Termination::StepStall);

  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("control", &SolveReport::control)
      .def_readonly("state", &SolveReport::state)
      .def_readonly("adjoint", &SolveReport::adjoint)
      .def_readonly("objective_history", &SolveReport::objective_history)
      .def_readonly("stationarity_history", &SolveReport::stationarity_history)
      .def_readonly("jumps", &SolveReport::jumps)
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("termination", &SolveReport::termination)
      .def_property_readonly("objective", &SolveReport::final_objective)
      .def_property_readonly("stationarity", &SolveReport::final_stationarity);

  m.def("make_grid", &make_grid, py::arg("tau"), py::arg("T"), py::arg("dt"));

  m.def(
      "build_problem",
      [](const std::string& name, std::optional<double> alpha,
         std::optional<double> beta, std::optional<double> tau,
         std::optional<double> T, std::optional<double> u_lo,
         std::optional<double> u_hi) {
        return build_problem(name,
                             overrides_from_kwargs(alpha, beta, tau, T, u_lo, u_hi));
      },
      py::arg("name"), py::kw_only(), py::arg("alpha") = std::nullopt,
      py::arg("beta") = std::nullopt, py::arg("tau") = std::nullopt,
      py::arg("T") = std::nullopt, py::arg("u_lo") = std::nullopt,
      py::arg("u_hi") = std::nullopt);

  m.def("desired_state", &desired_state, py::arg("t"));
  m.def("check_jacobians", &check_jacobians, py::arg("problem"),
        py::arg("samples") = 100, py::arg("seed") = 0);

  m.def(
      "lse",
      [](const std::vector<double>& values, double k) { return lse(values, k); },
      py::arg("values"), py::arg("k"));
  m.def(
      "lie_window",
      [](const std::vector<double>& window, double dt, double k) {
        return lie_window(window, dt, k);
      },
      py::arg("window"), py::arg("dt"), py::arg("k"));

  m.def(
      "integrate_regularized",
      [](const ProblemDefinition& p, py::handle control, double k,
         const TimeGrid& grid) {
        return integrate_regularized(p, control_from_python(grid, p.control_dim, control),
                                     k, grid, true);
      },
      py::arg("problem"), py::arg("control"), py::arg("k"), py::arg("grid"));
  m.def(
      "integrate_hardmax",
      [](const ProblemDefinition& p, py::handle control, const TimeGrid& grid) {
        return integrate_hardmax(p, control_from_python(grid, p.control_dim, control),
                                 grid);
      },
      py::arg("problem"), py::arg("control"), py::arg("grid"));
  m.def(
      "evaluate_objective",
      [](const ProblemDefinition& p, const ForwardSolveOutput& out, py::handle control) {
        return evaluate_objective(
            p, out, control_from_python(out.state.grid(), p.control_dim, control));
      },
      py::arg("problem"), py::arg("forward"), py::arg("control"));
  m.def(
      "integral_residual",
      [](const ProblemDefinition& p, const ForwardSolveOutput& out, py::handle control) {
        return integral_residual(
            p, out, control_from_python(out.state.grid(), p.control_dim, control));
      },
      py::arg("problem"), py::arg("forward"), py::arg("control"));
  m.def(
      "picard_solve",
      [](const ProblemDefinition& p, py::handle control, const TimeGrid& grid,
         std::optional<double> k, double tol, int max_iter) {
        PicardResult r = picard_solve(p, control_from_python(grid, p.control_dim, control),
                                      grid, k, tol, max_iter);
        return py::make_tuple(r.output, r.iterations, r.residual_history);
      },
      py::arg("problem"), py::arg("control"), py::arg("grid"),
      py::arg("k") = std::nullopt, py::arg("tol") = 1e-10,
      py::arg("max_iter") = 200);

  m.def(
      "reduced_gradient",
      [](const ProblemDefinition& p, py::handle control, double k,
         const TimeGrid& grid) {
        GradientResult g =
            reduced_gradient(p, control_from_python(grid, p.control_dim, control), k, grid);
        return py::make_tuple(trajectory_array(g.gradient), g.objective, g.forward,
                              g.adjoint);
      },
      py::arg("problem"), py::arg("control"), py::arg("k"), py::arg("grid"));
  m.def(
      "optimality_residual",
      [](const ProblemDefinition& p, py::handle control, double k,
         const TimeGrid& grid) {
        return optimality_residual(p, control_from_python(grid, p.control_dim, control),
                                   k, grid);
      },
      py::arg("problem"), py::arg("control"), py::arg("k"), py::arg("grid"));
  m.def(
      "solve_discrete_adjoint",
      [](const ProblemDefinition& p, const ForwardSolveOutput& fwd, py::handle control,
         std::optional<double> k) {
        return solve_discrete_adjoint(
            p, fwd, control_from_python(fwd.state.grid(), p.control_dim, control), k,
            fwd.state.grid());
      },
      py::arg("problem"), py::arg("forward"), py::arg("control"),
      py::arg("k") = std::nullopt);
  m.def(
      "detect_jumps",
      [](const AdjointOutput& adj, const ForwardSolveOutput& fwd, py::handle control,
         const ProblemDefinition& p, double spike_threshold) {
        return detect_jumps(adj, fwd,
                            control_from_python(fwd.state.grid(), p.control_dim, control),
                            p, fwd.state.grid(), spike_threshold);
      },
      py::arg("adjoint"), py::arg("forward"), py::arg("control"), py::arg("problem"),
      py::arg("spike_threshold") = 20.0);

  m.def(
      "projected_gradient",
      [](const ProblemDefinition& p, double k, const TimeGrid& grid,
         const OptimizerConfig& cfg, py::handle u0) {
        return projected_gradient(p, k, grid, cfg,
                                  control_from_python(grid, p.control_dim, u0));
      },
      py::arg("problem"), py::arg("k"), py::arg("grid"),
      py::arg("config") = OptimizerConfig{}, py::arg("u0") = 0.0);
}
