"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import supctrl


def test_grid_construction():
    g = supctrl.make_grid(0.2, 3.0, 1e-3)
    assert g.n_hist == 200
    assert g.n_fwd == 3000
    assert g.dt == 1e-3
    with pytest.raises(supctrl.SupctrlError):
        supctrl.make_grid(0.2, 3.0, 0.3)


def test_smooth_max_values():
    assert supctrl.lse([0.0, 0.0], 1.0) == pytest.approx(math.log(2.0), abs=1e-15)
    r = supctrl.lie_window([0.0, 1.0, 0.0], 0.1, 100.0)
    assert r.value == pytest.approx(0.9769741490700595, abs=1e-12)
    assert 0.1 * sum(r.weights) == pytest.approx(1.0, abs=1e-12)
    assert min(r.weights) >= 0.0


def test_problem_registry():
    p = supctrl.build_problem("fig1_tracking")
    assert p.state_dim == 1
    assert p.tau == 0.2
    assert supctrl.desired_state(0.5) == 0.5
    assert supctrl.desired_state(2.5) == -0.5
    assert supctrl.check_jacobians(p, samples=20, seed=7) < 1e-6
    with pytest.raises(supctrl.SupctrlError):
        supctrl.build_problem("unknown")


def test_forward_solves_and_objective():
    p = supctrl.build_problem("fig1_tracking")
    g = supctrl.make_grid(p.tau, p.T, 0.01)
    hard = supctrl.integrate_hardmax(p, 0.0, g)
    assert np.all(hard.state.array() == 0.0)

    t = np.arange(g.n_fwd + 1) * g.dt
    u = np.sin(3.0 * t)
    reg = supctrl.integrate_regularized(p, u, 1e3, g)
    assert np.all(np.isfinite(reg.state.array()))
    assert supctrl.integral_residual(p, reg, u) <= 1e-12

    j = supctrl.evaluate_objective(p, reg, u)
    assert j > 0.0

    out, iters, residuals = supctrl.picard_solve(p, u, g, k=1e3, tol=1e-10)
    assert iters >= 1
    assert residuals[-1] < 1e-10
    assert np.max(np.abs(out.state.array() - reg.state.array())) < 1e-9


def test_gradient_consistency():
    p = supctrl.build_problem("fig1_tracking")
    g = supctrl.make_grid(p.tau, p.T, 0.02)
    rng = np.random.default_rng(11)
    u = rng.uniform(-5.0, 5.0, g.n_fwd + 1)
    du = rng.uniform(-1.0, 1.0, g.n_fwd + 1)

    grad, obj, fwd, adj = supctrl.reduced_gradient(p, u, 1e3, g)
    assert adj.lam.array()[-1, 0] == 0.0

    h = 1e-5
    jp = supctrl.evaluate_objective(
        p, supctrl.integrate_regularized(p, u + h * du, 1e3, g), u + h * du
    )
    jm = supctrl.evaluate_objective(
        p, supctrl.integrate_regularized(p, u - h * du, 1e3, g), u - h * du
    )
    fd = (jp - jm) / (2.0 * h)
    directional = g.dt * float(grad[:, 0] @ du)
    assert fd == pytest.approx(directional, rel=1e-6)


def test_projected_gradient_descends():
    p = supctrl.build_problem("fig1_tracking")
    g = supctrl.make_grid(p.tau, p.T, 0.01)
    cfg = supctrl.OptimizerConfig()
    cfg.max_iters = 25
    cfg.tol_stationarity = 1e-10
    report = supctrl.projected_gradient(p, 100.0, g, cfg, 0.0)
    hist = report.objective_history
    assert len(hist) >= 2
    assert all(b < a for a, b in zip(hist, hist[1:]))
    assert np.max(np.abs(report.control.array())) <= 5.0
    assert report.stationarity < hist[0]
