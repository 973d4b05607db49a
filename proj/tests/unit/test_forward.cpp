#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "supctrl/errors.hpp"
#include "supctrl/forward.hpp"
#include "test_problems.hpp"

using namespace supctrl;

namespace {

Trajectory zero_control(const TimeGrid& g) {
  return Trajectory::constant(g, 1, Span::Forward, 0.0);
}

Trajectory clipped_sine(const TimeGrid& g) {
  return Trajectory::sampled(g, 1, Span::Forward, [](double t, int) {
    return std::clamp(std::sin(3.0 * t), -5.0, 5.0);
  });
}

double forward_sup_gap(const ForwardSolveOutput& a, const ForwardSolveOutput& b) {
  const TimeGrid& g = a.state.grid();
  double m = 0.0;
  for (int j = 0; j <= g.n_fwd; ++j) {
    for (int c = 0; c < a.state.dim(); ++c) {
      m = std::max(m, std::abs(a.state.at(g.n_hist + j, c) -
                               b.state.at(g.n_hist + j, c)));
    }
  }
  return m;
}

}  // namespace

TEST_CASE("zero dynamics freeze the history value") {
  const auto p = testing::frozen_problem(0.5, 2.0, 1.75);
  const TimeGrid g = make_grid(p.tau, p.horizon, 0.05);
  const Trajectory u = zero_control(g);
  for (const auto& out : {integrate_hardmax(p, u, g),
                          integrate_regularized(p, u, 10.0, g)}) {
    for (int i = 0; i < out.state.node_count(); ++i) {
      CHECK(out.state.at(i, 0) == 1.75);
    }
  }
}

TEST_CASE("Euler is exact for constant slope") {
  // dt = 1/8 is a dyadic so the repeated additions stay exact.
  const auto p = testing::integrator_tracking(0.25, 1.0, false, 0.0, 0.0);
  const TimeGrid g = make_grid(p.tau, p.horizon, 0.125);
  const Trajectory u = Trajectory::constant(g, 1, Span::Forward, 1.0);
  const auto out = integrate_regularized(p, u, 100.0, g);
  for (int j = 0; j <= g.n_fwd; ++j) {
    CHECK(out.state.at(g.n_hist + j, 0) == g.forward_time(j));
  }
}

TEST_CASE("uncontrolled tracking state stays near zero at sharp k") {
  // With zero history the only forcing is -2 LIE(0-window) = 2|log tau|/k;
  // integrating x' = x + 3.22e-6 in closed form bounds x(3) by ~6.2e-5.
  const auto p = build_problem(BuiltinProblem::fig1_tracking);
  const TimeGrid g = make_grid(p.tau, p.horizon, 1e-3);
  const auto out = integrate_regularized(p, zero_control(g), 1e6, g);
  CHECK(out.state.max_abs() <= 1e-4);
  CHECK(out.state.max_abs() > 0.0);  // the smoothing floor does force it
}

TEST_CASE("hard-max tracking stays exactly at the zero fixed point") {
  const auto p = build_problem(BuiltinProblem::fig1_tracking);
  const TimeGrid g = make_grid(p.tau, p.horizon, 1e-2);
  const auto out = integrate_hardmax(p, zero_control(g), g);
  for (int i = 0; i < out.state.node_count(); ++i) CHECK(out.state.at(i, 0) == 0.0);
  for (int j = 0; j <= g.n_fwd; ++j) CHECK(out.aux_v.at(j, 0) == 0.0);
}

TEST_CASE("sliding window max agrees with a brute-force scan") {
  const auto p = build_problem(BuiltinProblem::fig1_tracking);
  const TimeGrid g = make_grid(p.tau, p.horizon, 5e-3);
  const Trajectory u = Trajectory::sampled(g, 1, Span::Forward, [](double t, int) {
    return 4.0 * std::sin(3.0 * t) + 1.0 * std::sin(17.0 * t);
  });
  const auto out = integrate_hardmax(p, u, g);
  for (int j = 0; j <= g.n_fwd; ++j) {
    double brute = out.state.at(j, 0);  // window = grid nodes [j, j + N - 1]
    for (int gi = j; gi <= g.n_hist + j - 1; ++gi) {
      brute = std::max(brute, out.state.at(gi, 0));
    }
    CHECK(out.aux_v.at(j, 0) == brute);
  }
}

TEST_CASE("monotone state attains its window max at the newest sample") {
  const auto p = testing::integrator_tracking(0.25, 1.0, true, 0.0, 0.0);
  const TimeGrid g = make_grid(p.tau, p.horizon, 0.0125);
  const Trajectory u = Trajectory::constant(g, 1, Span::Forward, 1.0);
  const auto out = integrate_hardmax(p, u, g);
  for (int j = 1; j <= g.n_fwd; ++j) {
    CHECK(out.aux_v.at(j, 0) == out.state.at(g.n_hist + j - 1, 0));
  }
}

TEST_CASE("history segment is immutable under the control") {
  const auto p = build_problem(BuiltinProblem::fig1_tracking);
  const TimeGrid g = make_grid(p.tau, p.horizon, 1e-2);
  const auto a = integrate_regularized(p, zero_control(g), 100.0, g);
  const auto b = integrate_regularized(p, clipped_sine(g), 100.0, g);
  for (int i = 0; i <= g.n_hist; ++i) {
    CHECK(a.state.at(i, 0) == 0.0);
    CHECK(a.state.at(i, 0) == b.state.at(i, 0));
  }
}

TEST_CASE("regularized solve approaches the hard-max solve as k grows") {
  const auto p = build_problem(BuiltinProblem::fig1_tracking);
  const TimeGrid g = make_grid(p.tau, p.horizon, 2e-3);
  const Trajectory u = clipped_sine(g);
  const auto hard = integrate_hardmax(p, u, g);
  double prev = 1e300;
  double final_gap = 0.0;
  for (double k : {10.0, 100.0, 1000.0, 10000.0}) {
    const auto reg = integrate_regularized(p, u, k, g);
    final_gap = forward_sup_gap(reg, hard);
    CHECK(final_gap < prev);
    prev = final_gap;
  }
  const double envelope = 2.0 * std::abs(std::log(p.tau)) / 1e4 *
                          std::exp(3.0 * p.horizon);
  CHECK(final_gap <= 10.0 * envelope);
}

TEST_CASE("halving the step at least halves the gap to a fine reference") {
  const auto p = build_problem(BuiltinProblem::fig1_tracking);
  const double k = 100.0;
  auto solve = [&](double dt) {
    const TimeGrid g = make_grid(p.tau, p.horizon, dt);
    return integrate_regularized(p, clipped_sine(g), k, g);
  };
  const auto coarse = solve(0.02);
  const auto half = solve(0.01);
  const auto ref = solve(0.0025);

  auto gap_vs_ref = [&](const ForwardSolveOutput& out, int stride) {
    const TimeGrid& g = out.state.grid();
    const TimeGrid& rg = ref.state.grid();
    double m = 0.0;
    for (int j = 0; j <= g.n_fwd; ++j) {
      m = std::max(m, std::abs(out.state.at(g.n_hist + j, 0) -
                               ref.state.at(rg.n_hist + stride * j, 0)));
    }
    return m;
  };
  const double d1 = gap_vs_ref(coarse, 8);
  const double d2 = gap_vs_ref(half, 4);
  CHECK(d2 <= 0.75 * d1);
}

TEST_CASE("picard converges instantly for zero dynamics") {
  const auto p = testing::frozen_problem(0.5, 2.0, -0.4);
  const TimeGrid g = make_grid(p.tau, p.horizon, 0.1);
  const PicardResult r = picard_solve(p, zero_control(g), g, std::nullopt, 1e-12, 10);
  CHECK(r.iterations == 1);
  CHECK(r.residual_history.size() == 1);
  CHECK(r.residual_history[0] == 0.0);
}

TEST_CASE("picard fixed point matches the Euler sweep") {
  const auto p = build_problem(BuiltinProblem::fig1_tracking);
  const TimeGrid g = make_grid(p.tau, p.horizon, 1e-2);
  const Trajectory u = Trajectory::constant(g, 1, Span::Forward, 1.0);
  const double k = 1e4;
  const PicardResult r = picard_solve(p, u, g, k, 1e-12, 400);
  const auto euler = integrate_regularized(p, u, k, g);
  CHECK(forward_sup_gap(r.output, euler) <= 1e-12);

  // Envelope from the contraction proof: r_i <= K (2L)^{i-1} T^i / i!, with
  // L = 3 (|F_x| = 1, |F_y| = 2) and K measured from the first residual.
  const double L = 3.0;
  const double T = p.horizon;
  const double K = r.residual_history[0] / T;
  double bound = K * T;  // i = 1
  for (std::size_t i = 1; i < r.residual_history.size(); ++i) {
    CHECK(r.residual_history[i - 1] <= bound * (1.0 + 1e-9));
    bound *= 2.0 * L * T / static_cast<double>(i + 1);
  }
}

TEST_CASE("picard reports no convergence when starved of sweeps") {
  const auto p = build_problem(BuiltinProblem::fig1_tracking);
  const TimeGrid g = make_grid(p.tau, p.horizon, 1e-2);
  const Trajectory u = Trajectory::constant(g, 1, Span::Forward, 1.0);
  CHECK_THROWS_AS(picard_solve(p, u, g, 1e4, 1e-12, 2), NoConvergence);
  try {
    picard_solve(p, u, g, 1e4, 1e-12, 2);
  } catch (const NoConvergence& e) {
    CHECK(e.last_residual > 0.0);
  }
}

TEST_CASE("integral residual vanishes for solver output and flags defects") {
  const auto p = build_problem(BuiltinProblem::fig1_tracking);
  const TimeGrid g = make_grid(p.tau, p.horizon, 1e-2);
  const Trajectory u = clipped_sine(g);
  const auto out = integrate_regularized(p, u, 500.0, g);
  CHECK(integral_residual(p, out, u) <= 1e-12);

  Trajectory bent = out.state;
  bent.at(g.n_hist + g.n_fwd / 2, 0) += 1.0;
  CHECK(integral_residual(p, bent, u, 500.0) >= 1.0 - 10.0 * g.dt);
}

TEST_CASE("integral residual of the zero trajectory against x' = u is T") {
  const auto p = testing::integrator_tracking(0.25, 1.0, false, 0.0, 0.0);
  const TimeGrid g = make_grid(p.tau, p.horizon, 0.05);
  const Trajectory u = Trajectory::constant(g, 1, Span::Forward, 1.0);
  Trajectory zero_state(g, 1, Span::Full);
  CHECK(integral_residual(p, zero_state, u, std::nullopt) ==
        doctest::Approx(p.horizon).epsilon(1e-12));
}

TEST_CASE("objective quadrature") {
  const auto frozen = testing::frozen_problem(0.5, 2.0, 0.0);
  const TimeGrid fg = make_grid(0.5, 2.0, 0.1);
  const auto fo = integrate_hardmax(frozen, zero_control(fg), fg);
  CHECK(evaluate_objective(frozen, fo, zero_control(fg)) == 0.0);

  // Tracked state with zero control costs nothing.
  const auto fig1 = build_problem(BuiltinProblem::fig1_tracking);
  const TimeGrid g = make_grid(fig1.tau, fig1.horizon, 1e-3);
  ForwardSolveOutput tracked;
  tracked.state = Trajectory::sampled(g, 1, Span::Full, [](double t, int) {
    return t >= 0.0 ? desired_state(t) : 0.0;
  });
  tracked.aux_v = Trajectory(g, 1, Span::Forward);
  CHECK(evaluate_objective(fig1, tracked, zero_control(g)) == 0.0);

  // Constant unit control through x' = |u| gives 1/3 + 1 + 4 up to O(dt).
  const auto nonex = build_problem(BuiltinProblem::nonexistence_demo);
  const TimeGrid ng = make_grid(nonex.tau, nonex.horizon, 1e-3);
  const Trajectory one = Trajectory::constant(ng, 1, Span::Forward, 1.0);
  const auto no = integrate_hardmax(nonex, one, ng);
  CHECK(no.state.at(ng.n_hist + ng.n_fwd, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(evaluate_objective(nonex, no, one) ==
        doctest::Approx(16.0 / 3.0).epsilon(2e-4));
}

TEST_CASE("instability is reported as NonFinite") {
  // x' = x - 2v + u with a huge control on a coarse grid blows up in double
  // precision eventually; the error must carry the blow-up location.
  const auto p = testing::integrator_tracking(0.25, 1.0, false, 0.0, 0.0);
  ProblemDefinition runaway = p;
  runaway.f0 = [](const Vector& x, const Vector&, Vector& out) {
    out[0] = x[0] * x[0] * x[0] + 1.0;
  };
  runaway.horizon = 50.0;
  const TimeGrid g = make_grid(0.25, 50.0, 0.25);
  CHECK_THROWS_AS(
      integrate_hardmax(runaway, Trajectory::constant(g, 1, Span::Forward, 1.0), g),
      NonFinite);
}

TEST_CASE("max-Gronwall inequality holds on randomized instances") {
  // Build nonneg piecewise-linear x with zero history satisfying
  //   x(t) <= k1 + k2 * int_0^t x + max x_s ds
  // (left-rectangle quadrature) and verify x(t) <= k1 exp(2 k2 t) nodewise.
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const TimeGrid g = make_grid(0.3, 1.5, 0.01);
  const int H = g.n_hist;
  const int M = g.n_fwd;

  for (int trial = 0; trial < 100; ++trial) {
    const double k1 = 0.1 + 4.9 * unit(rng);
    const double k2 = (trial % 5 == 0) ? 0.0 : 3.0 * unit(rng);

    // Nonnegative random walk, zero on the history.
    std::vector<double> y(g.node_count(), 0.0);
    for (int i = H + 1; i < g.node_count(); ++i) {
      y[i] = std::max(0.0, y[i - 1] + 0.6 * (unit(rng) - 0.4));
    }

    // Left-rectangle integral of y + (window max of y, current node included).
    std::vector<double> q(M + 1, 0.0);
    for (int j = 0; j < M; ++j) {
      double wmax = 0.0;
      for (int gi = j; gi <= H + j; ++gi) wmax = std::max(wmax, y[gi]);
      q[j + 1] = q[j] + g.dt * (y[H + j] + wmax);
    }

    // Largest feasible scaling keeps the hypothesis satisfied.
    double worst = 0.0;
    for (int j = 0; j <= M; ++j) worst = std::max(worst, y[H + j] - k2 * q[j]);
    const double c = worst > 0.0 ? std::min(1.0, 0.999 * k1 / worst) : 1.0;

    for (int j = 0; j <= M; ++j) {
      CHECK(c * y[H + j] <= k1 * std::exp(2.0 * k2 * g.forward_time(j)) + 1e-12);
    }
  }
}
