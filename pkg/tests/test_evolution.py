import numpy as np
import pytest

from crossflow._validation import ParameterError, PreconditionError, StepError
from crossflow.evolution import (
    COLUMNS,
    JkoConfig,
    TestFunction,
    TrajectoryRecord,
    contraction_ratios,
    decay_rate_fit,
    default_test_functions,
    discrete_weak_residual,
    evolve,
    fit_rate_constant,
    fv_evolve,
    fv_oracle_step,
    fv_stable_dt,
    holder_violation,
    jko_step,
    jko_step_quantiles,
    quantile_energy,
)
from crossflow.experiments import shifted_pair
from crossflow.functionals import energy
from crossflow.grid import Grid1D, QuantileRep, density_from_fn, from_quantiles, to_quantiles
from crossflow.model import power_model
from crossflow.transport import w2


def _translate(state, a, b):
    g = state.grid
    x = g.centers
    u = density_from_fn(g, lambda y: np.interp(y - a, x, state.ubar.values, left=0, right=0))
    v = density_from_fn(g, lambda y: np.interp(y - b, x, state.vbar.values, left=0, right=0))
    return u, v


def _l1(a, b):
    return float(np.sum(np.abs(a.values - b.values)) * a.grid.dx)


def test_config_validation():
    with pytest.raises(ParameterError):
        JkoConfig(0.0, 1.0)
    with pytest.raises(ParameterError):
        JkoConfig(0.1, 1.0, nq=1)
    assert JkoConfig(1e-2, 3.0).n_steps == 300


def test_quantile_energy_gradient():
    params = power_model(p=4, q=4, eps=0.05, center_u=-0.2, center_v=0.3)
    rng = np.random.default_rng(0)
    x = np.sort(rng.normal(-0.2, 0.5, 32))
    y = np.sort(rng.normal(0.3, 0.4, 32))
    _, gx, gy = quantile_energy(params, x, y)
    h = 1e-6
    for k in (0, 5, 16, 31):
        for vec, grad, which in ((x, gx, 0), (y, gy, 1)):
            up, dn = vec.copy(), vec.copy()
            up[k] += h
            dn[k] -= h
            args_up = (up, y) if which == 0 else (x, up)
            args_dn = (dn, y) if which == 0 else (x, dn)
            fd = (quantile_energy(params, *args_up, False)[0] - quantile_energy(params, *args_dn, False)[0]) / (2 * h)
            assert grad[k] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_quantile_energy_matches_grid_energy(coupled, state_c):
    u, v = shifted_pair(state_c)
    x, y = to_quantiles(u, 2048).positions, to_quantiles(v, 2048).positions
    e_q = quantile_energy(coupled, x, y, False)[0]
    assert e_q == pytest.approx(energy(coupled, u, v), abs=2e-3)


def test_one_step_energy_inequality(coupled, state_c):
    u, v = shifted_pair(state_c)
    cfg = JkoConfig(1e-2, 1e-2, nq=256)
    x, y = to_quantiles(u, 256).positions, to_quantiles(v, 256).positions
    _, _, info = jko_step_quantiles(coupled, x, y, cfg)
    assert info.energy_next + (info.w2_u**2 + info.w2_v**2) / (2 * cfg.tau) <= info.energy_prev + 1e-10
    assert info.w2_u > 0 and not info.stalled


def test_jko_step_types(decoupled, state0_256):
    cfg = JkoConfig(1e-2, 1e-2, nq=256)
    out = jko_step(decoupled, _translate(state0_256, 0.2, 0.0), cfg)
    assert out[0].grid == state0_256.grid
    qs = jko_step(decoupled, (QuantileRep(np.linspace(-1, 1, 64)), QuantileRep(np.linspace(-1, 1, 64))), cfg)
    assert isinstance(qs[0], QuantileRep)


def test_fixed_point(decoupled, state0):
    cfg = JkoConfig(1e-2, 1e-2, nq=1024)
    x = to_quantiles(state0.ubar, 1024).positions
    y = to_quantiles(state0.vbar, 1024).positions
    _, _, info = jko_step_quantiles(decoupled, x, y, cfg)
    assert np.hypot(info.w2_u, info.w2_v) <= 1e-4


def test_translated_profile_relaxes_like_implicit_euler(decoupled, state0_256):
    # a translate of the quadratic-potential steady state stays a translate;
    # the implicit scheme moves its centre by a factor 1/(1 + tau) per step
    a = 0.4
    cfg = JkoConfig(0.05, 0.5, nq=512)
    traj = evolve(decoupled, _translate(state0_256, a, 0.0), cfg, state=state0_256, keep_snapshots=False)
    centre = np.mean(traj.final[0].positions)
    assert centre == pytest.approx(a / (1 + cfg.tau) ** cfg.n_steps, abs=2e-3)
    assert np.mean(traj.final[1].positions) == pytest.approx(0.0, abs=1e-3)


def test_evolve_record(coupled, state_c):
    cfg = JkoConfig(2e-2, 0.2, nq=512)
    traj = evolve(coupled, shifted_pair(state_c), cfg, state=state_c)
    assert traj.as_array().shape == (11, len(COLUMNS))
    e = traj.column("e_eps")
    assert np.all(np.diff(e) <= 1e-10)
    assert traj.meta["telescoped_lhs"] <= traj.meta["e0"] + 1e-9
    assert traj.meta["weak_form_violations"] == 0
    assert traj.meta["holder_ratio"] <= 1.0
    assert len(traj.snapshots) == 11
    text = traj.to_csv({"seed": 1})
    assert text.splitlines()[1] == ",".join(COLUMNS)
    assert '"seed": 1' in text.splitlines()[0]


def test_step_error_on_iteration_cap(coupled, state_c):
    cfg = JkoConfig(0.5, 0.5, nq=256, inner_tol=1e-14, inner_max_iter=1)
    with pytest.raises(StepError) as exc:
        evolve(coupled, shifted_pair(state_c), cfg, state=state_c)
    assert exc.value.best is not None and exc.value.gap > 0
    assert exc.value.partial.meta["aborted_at"] == 0.5


def test_weak_residual_small(coupled, state_c):
    u, v = shifted_pair(state_c)
    cfg = JkoConfig(1e-2, 1e-2, nq=1024)
    nxt = jko_step(coupled, (u, v), cfg)
    res = discrete_weak_residual(coupled, (u, v), nxt, cfg.tau, default_test_functions(-2.5, 2.5))
    assert res.ok
    ru, rv = res
    assert ru <= res.bound + res.slack


def test_weak_residual_detects_wrong_step(coupled, state_c):
    # the previous state is not a step of the flow from itself shifted by 0.3
    u, v = shifted_pair(state_c)
    far = _translate(state_c, -0.3, 0.3)
    res = discrete_weak_residual(coupled, (u, v), far, 1e-2, energy_drop=0.0)
    assert not res.ok


def test_test_function_derivatives():
    z = TestFunction(0.3, 0.7)
    x = np.linspace(-2, 2, 9)
    h = 1e-5
    np.testing.assert_allclose(z.deriv1(x), (z.value(x + h) - z.value(x - h)) / (2 * h), atol=1e-8)
    np.testing.assert_allclose(z.deriv2(x), (z.deriv1(x + h) - z.deriv1(x - h)) / (2 * h), atol=1e-7)
    s = np.linspace(-5, 5, 200001)
    sup = np.max(np.abs(z.value(s))) + np.max(np.abs(z.deriv1(s))) + np.max(np.abs(z.deriv2(s)))
    assert z.c2_norm() == pytest.approx(sup, rel=1e-6)


def test_fv_stationary(coupled):
    g = Grid1D(-3, 3, 256)
    from crossflow.stationary import solve_stationary

    st_ = solve_stationary(coupled, g)
    u, v = fv_evolve(coupled, (st_.ubar, st_.vbar), 0.05)
    assert _l1(u, st_.ubar) / 0.05 < 1e-6


def test_fv_stability_guard(coupled, state_c):
    pair = shifted_pair(state_c)
    with pytest.raises(StepError):
        fv_oracle_step(coupled, pair, 10 * fv_stable_dt(coupled, pair))
    u, v = fv_oracle_step(coupled, pair, fv_stable_dt(coupled, pair))
    assert np.all(u.values >= 0)


def test_fv_drift(decoupled, state0_256):
    a = 0.4
    u, _ = fv_evolve(decoupled, _translate(state0_256, a, 0.0), 0.3)
    centre = float(np.sum(u.grid.centers * u.values) * u.grid.dx)
    assert centre == pytest.approx(a * np.exp(-0.3), abs=5e-3)


def test_jko_agrees_with_fv():
    params = power_model(p=4, q=4, eps=0.05)
    g = Grid1D(-3, 3, 256)
    from crossflow.stationary import solve_stationary

    st_ = solve_stationary(params, g)
    init = shifted_pair(st_)
    traj = evolve(params, init, JkoConfig(5e-3, 0.2, nq=1024), state=st_, keep_snapshots=False)
    ju = from_quantiles(traj.final[0], g)
    fu, _ = fv_evolve(params, init, 0.2)
    assert _l1(ju, fu) < 1.5e-2
    assert w2(ju, fu) < 1e-2


def _synthetic(ls, dt=0.1):
    rec = TrajectoryRecord()
    for k, l in enumerate(ls):
        rec.rows.append((k * dt, 0.0, l) + (0.0,) * (len(COLUMNS) - 3))
    return rec


def test_decay_rate_fit_synthetic():
    t = np.arange(31) * 0.1
    rec = _synthetic(0.3 * np.exp(-1.7 * t))
    assert decay_rate_fit(rec) == pytest.approx(1.7, rel=1e-10)
    assert decay_rate_fit(rec, window=(0.0, 1.0)) == pytest.approx(1.7, rel=1e-10)
    np.testing.assert_allclose(contraction_ratios(rec), np.exp(-0.17))
    with pytest.raises(PreconditionError):
        decay_rate_fit(_synthetic([1.0, 0.5, 0.2]))


def test_fit_rate_constant():
    assert fit_rate_constant([0.0, 0.02, 0.05], [1.98, 1.97, 1.9], 1.0) == pytest.approx(1.0)
    assert fit_rate_constant([0.0, 0.1], [2.0, 2.1], 1.0) == 0.0


def test_holder_synthetic():
    x = np.linspace(-1, 1, 16)
    snaps = [(x + 0.1 * k, x) for k in range(5)]
    times = [0.1 * k for k in range(5)]
    r = holder_violation(snaps, times, e0=1.0, tau=0.1)
    # worst pair: distance 0.4 over 0.4 + tau, constant sqrt(2) * 1.1
    assert r == pytest.approx(0.4 / (np.sqrt(2) * 1.1 * np.sqrt(0.5)), rel=1e-12)
