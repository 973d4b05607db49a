#include <doctest.h>

#include <cmath>

#include "supctrl/errors.hpp"
#include "supctrl/problem.hpp"

using namespace supctrl;

TEST_CASE("desired state follows the two-triangle profile") {
  CHECK(desired_state(0.5) == 0.5);
  CHECK(desired_state(0.0) == 0.0);
  CHECK(desired_state(1.5) == 0.0);
  CHECK(desired_state(2.0) == 0.0);
  CHECK(desired_state(2.5) == -0.5);
  CHECK(desired_state(3.0) == 0.0);
  CHECK_THROWS_AS(desired_state(-0.1), OutOfDomain);
  CHECK_THROWS_AS(desired_state(3.1), OutOfDomain);
}

TEST_CASE("desired state is continuous at the junctions") {
  for (double t0 : {1.0, 2.0}) {
    const double eps = 1e-12;
    CHECK(desired_state(t0 - eps) == doctest::Approx(desired_state(t0 + eps)).epsilon(1e-9));
    CHECK(desired_state(t0) == doctest::Approx(0.0));
  }
}

TEST_CASE("tracking problem defaults") {
  const ProblemDefinition p = build_problem(BuiltinProblem::fig1_tracking);
  CHECK(p.state_dim == 1);
  CHECK(p.control_dim == 1);
  CHECK(p.tau == 0.2);
  CHECK(p.horizon == 3.0);
  CHECK(p.control_lower[0] == -5.0);
  CHECK(p.control_upper[0] == 5.0);
  CHECK(p.max_coupled);
  CHECK_FALSE(p.has_terminal_cost());
  CHECK_FALSE(p.has_plant_control_map());

  Vector x(1), v(1), out(1);
  x[0] = 0.0;
  v[0] = 0.0;
  p.f0(x, v, out);
  CHECK(out[0] == 0.0);  // F(0, 0, 0) = 0

  x[0] = 2.0;
  v[0] = 3.0;
  p.f0(x, v, out);
  CHECK(out[0] == 2.0 - 6.0);

  // Cost at the tracked trajectory with zero control vanishes.
  Vector u = Vector::Zero(1);
  x[0] = desired_state(0.5);
  CHECK(p.running_cost(0.5, x, u) == 0.0);
}

TEST_CASE("tracking problem accepts overrides") {
  ProblemOverrides ov;
  ov.alpha = 0.0;
  ov.tau = 0.4;
  ov.control_lower = -1.0;
  ov.control_upper = 1.0;
  const ProblemDefinition p = build_problem("fig1_tracking", ov);
  CHECK(p.tau == 0.4);
  CHECK(p.control_upper[0] == 1.0);
  Vector x(1), u(1);
  x[0] = 10.0;
  u[0] = 2.0;
  CHECK(p.running_cost(0.5, x, u) == doctest::Approx(0.5 * 0.1 * 4.0));
}

TEST_CASE("inverted bounds are rejected") {
  ProblemOverrides ov;
  ov.control_lower = 2.0;
  ov.control_upper = -2.0;
  CHECK_THROWS_AS(build_problem(BuiltinProblem::fig1_tracking, ov), BadBounds);
}

TEST_CASE("unknown problem name") {
  CHECK_THROWS_AS(build_problem("does_not_exist"), UnknownProblem);
}

TEST_CASE("nonexistence demo wiring") {
  const ProblemDefinition p = build_problem(BuiltinProblem::nonexistence_demo);
  CHECK(p.horizon == 1.0);
  CHECK(p.tau == 2.0);
  CHECK(p.control_lower[0] == -1.0);
  CHECK(p.control_upper[0] == 3.0);
  CHECK(p.has_terminal_cost());
  CHECK_FALSE(p.max_coupled);
  CHECK(p.has_plant_control_map());
  CHECK(p.plant_control_map(-2.0) == 2.0);

  Vector xT(1);
  xT[0] = 1.0;
  CHECK(p.terminal_cost(xT) == 4.0);
  xT[0] = 2.0;
  CHECK(p.terminal_cost(xT) == 0.0);
}

TEST_CASE("registered Jacobians match finite differences") {
  // 100 random draws in [-10, 10] per problem, relative error below 1e-6.
  CHECK(check_jacobians(build_problem(BuiltinProblem::fig1_tracking), 100, 123) < 1e-6);
  CHECK(check_jacobians(build_problem(BuiltinProblem::nonexistence_demo), 100, 456) < 1e-6);
}
