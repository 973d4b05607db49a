#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>

namespace supctrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

// Control problem for dynamics that feed on the running maximum of the state
// over a trailing window:
//
//   x'(t) = F0(x(t), v(t)) + F1(x(t), v(t)) u(t),   v(t) = window max of x,
//   x = phi on [-tau, 0],   minimize  int_0^T j(t, x, u) dt + g(x(T)),
//   u(t) in [control_lower, control_upper].
//
// The affine-in-control split is structural: the solvers only ever assemble
// the right-hand side as F0 + F1*u.  Jacobians are supplied by the problem
// and can be validated against finite differences via check_jacobians().
struct ProblemDefinition {
  int state_dim = 0;
  int control_dim = 0;
  double tau = 0.0;
  double horizon = 0.0;

  std::function<void(double t, Vector& out)> history;  // phi, t in [-tau, 0]

  std::function<void(const Vector& x, const Vector& v, Vector& out)> f0;
  std::function<void(const Vector& x, const Vector& v, Matrix& out)> f0_x;
  std::function<void(const Vector& x, const Vector& v, Matrix& out)> f0_y;
  std::function<void(const Vector& x, const Vector& v, Matrix& out)> f1;  // n x m
  // Directional Jacobians of F1(x, v) * u as functions of x and v (n x n).
  std::function<void(const Vector& x, const Vector& v, const Vector& u, Matrix& out)> f1u_x;
  std::function<void(const Vector& x, const Vector& v, const Vector& u, Matrix& out)> f1u_y;

  std::function<double(double t, const Vector& x, const Vector& u)> running_cost;
  std::function<void(double t, const Vector& x, const Vector& u, RowVector& out)> running_cost_x;
  std::function<void(double t, const Vector& x, const Vector& u, RowVector& out)> running_cost_u;

  // Terminal cost g(x(T)); empty means zero.  The gradient hook is optional
  // and only needed when adjoints are requested for a terminal-cost problem.
  std::function<double(const Vector& xT)> terminal_cost;
  std::function<void(const Vector& xT, RowVector& out)> terminal_cost_x;

  Vector control_lower;
  Vector control_upper;

  // False when F ignores its window-max argument; integrators then skip the
  // window machinery entirely.
  bool max_coupled = true;

  // Componentwise transform applied to the control before it enters the
  // dynamics (the objective always sees the raw control).  Identity when
  // empty.  Used by prescribed-control studies; gradient-based code requires
  // it to be empty.
  std::function<double(double)> plant_control_map;

  bool has_terminal_cost() const { return static_cast<bool>(terminal_cost); }
  bool has_plant_control_map() const { return static_cast<bool>(plant_control_map); }
};

enum class BuiltinProblem { fig1_tracking, nonexistence_demo };

// Optional parameter overrides for the built-in problems.  Unset fields keep
// the problem's defaults.
struct ProblemOverrides {
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> tau;
  std::optional<double> horizon;
  std::optional<double> control_lower;
  std::optional<double> control_upper;
};

// fig1_tracking: scalar tracking problem
//   x' = x - 2 v + u, phi = 0, tau = 0.2, T = 3, U = [-5, 5],
//   j = (alpha/2)(x - x_d(t))^2 + (beta/2) u^2 with alpha = 100, beta = 0.1.
// nonexistence_demo: scalar problem on T = 1 with x' = |u|, U = [-1, 3],
//   j = |x - 2t|^2 + u and terminal cost 4 |x(1) - 2| (no optimal control
//   exists; used to study minimizing sequences).
ProblemDefinition build_problem(BuiltinProblem id, const ProblemOverrides& overrides = {});
ProblemDefinition build_problem(const std::string& name, const ProblemOverrides& overrides = {});

// Piecewise-linear reference trajectory of the tracking problem on [0, 3]:
// a triangle up to 1/2, a flat stretch, then a triangle down to -1/2.
// Throws OutOfDomain outside [0, 3] (1e-9 slack for roundoff at the ends).
double desired_state(double t);

// Compares every supplied Jacobian/partial against central finite differences
// at `samples` random points with entries in [-10, 10].  Returns the largest
// relative error seen (threshold for a healthy problem: 1e-6).
double check_jacobians(const ProblemDefinition& problem, int samples, unsigned seed);

}  // namespace supctrl
