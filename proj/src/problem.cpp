#include "supctrl/problem.hpp"

#include <cmath>
#include <random>

#include "supctrl/errors.hpp"

namespace supctrl {

double desired_state(double t) {
  if (t < -1e-9 || t > 3.0 + 1e-9) {
    throw OutOfDomain("desired_state: t = " + std::to_string(t) +
                      " outside [0, 3]");
  }
  t = std::clamp(t, 0.0, 3.0);
  if (t <= 1.0) return 0.5 - std::abs(t - 0.5);
  if (t < 2.0) return 0.0;
  return std::abs(t - 2.5) - 0.5;
}

namespace {

void validate_bounds(const ProblemDefinition& p) {
  if (p.control_lower.size() != p.control_dim ||
      p.control_upper.size() != p.control_dim) {
    throw BadBounds("control bounds do not match control dimension");
  }
  for (int i = 0; i < p.control_dim; ++i) {
    if (!(p.control_lower[i] <= p.control_upper[i])) {
      throw BadBounds("empty control box: lower > upper in component " +
                      std::to_string(i));
    }
  }
}

ProblemDefinition make_fig1(const ProblemOverrides& ov) {
  const double alpha = ov.alpha.value_or(100.0);
  const double beta = ov.beta.value_or(0.1);

  ProblemDefinition p;
  p.state_dim = 1;
  p.control_dim = 1;
  p.tau = ov.tau.value_or(0.2);
  p.horizon = ov.horizon.value_or(3.0);
  p.history = [](double, Vector& out) { out.setZero(); };
  p.f0 = [](const Vector& x, const Vector& v, Vector& out) {
    out[0] = x[0] - 2.0 * v[0];
  };
  p.f0_x = [](const Vector&, const Vector&, Matrix& out) { out(0, 0) = 1.0; };
  p.f0_y = [](const Vector&, const Vector&, Matrix& out) { out(0, 0) = -2.0; };
  p.f1 = [](const Vector&, const Vector&, Matrix& out) { out(0, 0) = 1.0; };
  p.f1u_x = [](const Vector&, const Vector&, const Vector&, Matrix& out) {
    out.setZero();
  };
  p.f1u_y = [](const Vector&, const Vector&, const Vector&, Matrix& out) {
    out.setZero();
  };
  p.running_cost = [alpha, beta](double t, const Vector& x, const Vector& u) {
    const double e = x[0] - desired_state(t);
    return 0.5 * alpha * e * e + 0.5 * beta * u[0] * u[0];
  };
  p.running_cost_x = [alpha](double t, const Vector& x, const Vector&,
                             RowVector& out) {
    out[0] = alpha * (x[0] - desired_state(t));
  };
  p.running_cost_u = [beta](double, const Vector&, const Vector& u,
                            RowVector& out) { out[0] = beta * u[0]; };
  p.control_lower = Vector::Constant(1, ov.control_lower.value_or(-5.0));
  p.control_upper = Vector::Constant(1, ov.control_upper.value_or(5.0));
  validate_bounds(p);
  return p;
}

ProblemDefinition make_nonexistence(const ProblemOverrides& ov) {
  ProblemDefinition p;
  p.state_dim = 1;
  p.control_dim = 1;
  p.tau = ov.tau.value_or(2.0);
  p.horizon = ov.horizon.value_or(1.0);
  p.history = [](double, Vector& out) { out.setZero(); };
  // The window maximum has already been evaluated away (the plant reduces to
  // x' = |u|), so F ignores v and the |.| sits in the plant control map.
  p.f0 = [](const Vector&, const Vector&, Vector& out) { out.setZero(); };
  p.f0_x = [](const Vector&, const Vector&, Matrix& out) { out.setZero(); };
  p.f0_y = [](const Vector&, const Vector&, Matrix& out) { out.setZero(); };
  p.f1 = [](const Vector&, const Vector&, Matrix& out) { out(0, 0) = 1.0; };
  p.f1u_x = [](const Vector&, const Vector&, const Vector&, Matrix& out) {
    out.setZero();
  };
  p.f1u_y = [](const Vector&, const Vector&, const Vector&, Matrix& out) {
    out.setZero();
  };
  p.running_cost = [](double t, const Vector& x, const Vector& u) {
    const double e = x[0] - 2.0 * t;
    return e * e + u[0];
  };
  p.running_cost_x = [](double t, const Vector& x, const Vector&, RowVector& out) {
    out[0] = 2.0 * (x[0] - 2.0 * t);
  };
  p.running_cost_u = [](double, const Vector&, const Vector&, RowVector& out) {
    out[0] = 1.0;
  };
  p.terminal_cost = [](const Vector& xT) { return 4.0 * std::abs(xT[0] - 2.0); };
  p.control_lower = Vector::Constant(1, ov.control_lower.value_or(-1.0));
  p.control_upper = Vector::Constant(1, ov.control_upper.value_or(3.0));
  p.max_coupled = false;
  p.plant_control_map = [](double u) { return std::abs(u); };
  validate_bounds(p);
  return p;
}

}  // namespace

ProblemDefinition build_problem(BuiltinProblem id, const ProblemOverrides& ov) {
  switch (id) {
    case BuiltinProblem::fig1_tracking:
      return make_fig1(ov);
    case BuiltinProblem::nonexistence_demo:
      return make_nonexistence(ov);
  }
  throw UnknownProblem("unknown builtin problem id");
}

ProblemDefinition build_problem(const std::string& name, const ProblemOverrides& ov) {
  if (name == "fig1_tracking") return build_problem(BuiltinProblem::fig1_tracking, ov);
  if (name == "nonexistence_demo") {
    return build_problem(BuiltinProblem::nonexistence_demo, ov);
  }
  throw UnknownProblem("unknown problem \"" + name + "\"");
}

namespace {

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1.0});
}

}  // namespace

double check_jacobians(const ProblemDefinition& p, int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(-10.0, 10.0);
  const int n = p.state_dim;
  const int m = p.control_dim;

  Vector x(n), v(n), u(m), xp(n), vp(n), fa(n), fb(n);
  Matrix jac(n, n), f1a(n, m), f1b(n, m);
  RowVector row_x(n), row_u(m);
  double worst = 0.0;

  auto bump = [&](Vector& vec, int i, double h) { vec[i] += h; };

  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < n; ++i) x[i] = draw(rng);
    for (int i = 0; i < n; ++i) v[i] = draw(rng);
    for (int i = 0; i < m; ++i) u[i] = draw(rng);
    const double t = std::abs(draw(rng)) / 10.0 * p.horizon * 0.99;

    // F0 Jacobians in x and v.
    p.f0_x(x, v, jac);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-6 * (1.0 + std::abs(x[i]));
      xp = x;
      bump(xp, i, h);
      p.f0(xp, v, fa);
      bump(xp, i, -2.0 * h);
      p.f0(xp, v, fb);
      for (int r = 0; r < n; ++r) {
        worst = std::max(worst, rel_err((fa[r] - fb[r]) / (2.0 * h), jac(r, i)));
      }
    }
    p.f0_y(x, v, jac);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-6 * (1.0 + std::abs(v[i]));
      vp = v;
      bump(vp, i, h);
      p.f0(x, vp, fa);
      bump(vp, i, -2.0 * h);
      p.f0(x, vp, fb);
      for (int r = 0; r < n; ++r) {
        worst = std::max(worst, rel_err((fa[r] - fb[r]) / (2.0 * h), jac(r, i)));
      }
    }

    // Directional Jacobians of F1*u.
    p.f1u_x(x, v, u, jac);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-6 * (1.0 + std::abs(x[i]));
      xp = x;
      bump(xp, i, h);
      p.f1(xp, v, f1a);
      bump(xp, i, -2.0 * h);
      p.f1(xp, v, f1b);
      const Vector d = (f1a * u - f1b * u) / (2.0 * h);
      for (int r = 0; r < n; ++r) worst = std::max(worst, rel_err(d[r], jac(r, i)));
    }
    p.f1u_y(x, v, u, jac);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-6 * (1.0 + std::abs(v[i]));
      vp = v;
      bump(vp, i, h);
      p.f1(x, vp, f1a);
      bump(vp, i, -2.0 * h);
      p.f1(x, vp, f1b);
      const Vector d = (f1a * u - f1b * u) / (2.0 * h);
      for (int r = 0; r < n; ++r) worst = std::max(worst, rel_err(d[r], jac(r, i)));
    }

    // Running-cost partials.
    p.running_cost_x(t, x, u, row_x);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-6 * (1.0 + std::abs(x[i]));
      xp = x;
      bump(xp, i, h);
      const double ja = p.running_cost(t, xp, u);
      bump(xp, i, -2.0 * h);
      const double jb = p.running_cost(t, xp, u);
      worst = std::max(worst, rel_err((ja - jb) / (2.0 * h), row_x[i]));
    }
    p.running_cost_u(t, x, u, row_u);
    for (int i = 0; i < m; ++i) {
      const double h = 1e-6 * (1.0 + std::abs(u[i]));
      Vector up = u;
      bump(up, i, h);
      const double ja = p.running_cost(t, x, up);
      bump(up, i, -2.0 * h);
      const double jb = p.running_cost(t, x, up);
      worst = std::max(worst, rel_err((ja - jb) / (2.0 * h), row_u[i]));
    }
  }
  return worst;
}

}  // namespace supctrl
