import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossflow._validation import PreconditionError
from crossflow.experiments import perturbation_suite, shifted_pair
from crossflow.functionals import (
    bregman,
    bregman_domination_check,
    comparison_constants,
    csiszar_kullback_ratio,
    dissipation,
    energy,
    energy_relation_correction,
    energy_report,
    entropy,
    entropy_lower_bound,
    functional_inequality_gap,
    lyapunov,
    lyapunov_alt,
    lyapunov_parts,
)
from crossflow.grid import Grid1D, density_from_fn
from crossflow.model import NonlinearitySpec
from crossflow.stationary import solve_stationary


def _shift(state, a, b):
    g = state.grid
    x, ub, vb = g.centers, state.ubar.values, state.vbar.values
    u = density_from_fn(g, lambda y: np.interp(y - a, x, ub, left=0, right=0))
    v = density_from_fn(g, lambda y: np.interp(y - b, x, vb, left=0, right=0))
    return u, v


def test_energy_uniform_pair(decoupled):
    g = Grid1D(-1, 2, 600)
    u = density_from_fn(g, lambda x: ((x >= 0) & (x <= 1)).astype(float))
    # 1/2 + 1/2 from the quadratic internal energies, 1/6 + 1/6 from x**2/2
    assert energy(decoupled, u, u) == pytest.approx(4 / 3, abs=1e-5)


def test_entropy_uniform():
    g = Grid1D(-1, 3, 400)
    u = density_from_fn(g, lambda x: ((x >= 0) & (x <= 2)).astype(float))
    assert entropy(u) == pytest.approx(-np.log(2), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 1.0), st.floats(-1, 1), st.floats(0.1, 5.0))
def test_entropy_lower_bound(w, c, beta):
    g = Grid1D(-6, 6, 1200)
    u = density_from_fn(g, lambda x: np.exp(-((x - c) ** 2) / (2 * w**2)))
    assert entropy(u) >= entropy_lower_bound(u, beta) - 1e-9


def test_bregman_quadratic():
    f = NonlinearitySpec(2)
    s = np.linspace(0, 3, 31)
    np.testing.assert_allclose(bregman(f, s, 1.2), 0.5 * (s - 1.2) ** 2, atol=1e-14)
    assert bregman(f, 0.7, 0.7) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3, 4]), st.floats(0, 5), st.floats(0, 5))
def test_bregman_nonnegative(m, s, sb):
    assert bregman(NonlinearitySpec(m), s, sb) >= 0


def test_lyapunov_zero_at_equilibrium(decoupled, state0, coupled, state_c):
    for params, state in ((decoupled, state0), (coupled, state_c)):
        l1, l2 = lyapunov(params, state, state.ubar, state.vbar)
        assert abs(l1) < 1e-12 and abs(l2) < 1e-12


def test_translated_pair_closed_forms(decoupled, state0):
    a, b = 0.25, -0.4
    u, v = _shift(state0, a, b)
    l1, l2 = lyapunov(decoupled, state0, u, v)
    assert l1 == pytest.approx(a**2 / 2, rel=1e-3)
    assert l2 == pytest.approx(b**2 / 2, rel=1e-3)
    d1, d2 = dissipation(decoupled, state0, u, v)
    assert d1 == pytest.approx(a**2, rel=2e-2)
    assert d2 == pytest.approx(b**2, rel=2e-2)


def test_lyapunov_forms_agree(coupled, state_c):
    for u, v in perturbation_suite(state_c, count=10, seed=3):
        np.testing.assert_allclose(lyapunov_parts(coupled, state_c, u, v), lyapunov_alt(coupled, state_c, u, v), rtol=1e-8, atol=1e-12)


def test_lyapunov_rejects_wrong_state(coupled, state0, state_c):
    u, v = shifted_pair(state_c)
    with pytest.raises(PreconditionError):
        lyapunov(coupled, state0, u, v)


def test_energy_relation(coupled, state_c):
    e_bar = energy(coupled, state_c.ubar, state_c.vbar)
    for u, v in perturbation_suite(state_c, count=10, seed=5):
        l1, l2 = lyapunov(coupled, state_c, u, v)
        lhs = energy(coupled, u, v) - e_bar
        rhs = l1 + l2 + energy_relation_correction(coupled, state_c, u, v)
        assert lhs == pytest.approx(rhs, abs=1e-11)


def test_functional_inequality_decoupled(decoupled, state0):
    worst = np.inf
    for u, v in perturbation_suite(state0, count=20, seed=1):
        g1, g2 = functional_inequality_gap(decoupled, state0, u, v, 0.0)
        l1, l2 = lyapunov(decoupled, state0, u, v)
        worst = min(worst, g1 / max(l1, 1e-12), g2 / max(l2, 1e-12))
    assert worst > -0.05


def test_diagnostic_constants_finite(coupled, state_c):
    pairs = perturbation_suite(state_c, count=15, seed=7)
    ratios = [bregman_domination_check(coupled, state_c, u, v) for u, v in pairs]
    assert all(np.isfinite(r) and not deg for r, deg in ratios)
    ck = [csiszar_kullback_ratio(coupled, state_c, u, v) for u, v in pairs]
    assert all(np.isfinite(a) and np.isfinite(b) for a, b in ck)
    consts = comparison_constants(coupled, state_c, pairs)
    assert set(consts) == {"l_by_e", "e_by_l", "phi_by_l1"}
    assert all(np.isfinite(c) and c >= 0 for c in consts.values())
    # the bound holds with the fitted constants
    for u, v in pairs:
        l1, l2 = lyapunov(coupled, state_c, u, v)
        assert l1 + l2 <= 2 * energy(coupled, u, v) + consts["l_by_e"] + 1e-12


def test_bregman_domination_degenerate(coupled, state_c):
    assert bregman_domination_check(coupled, state_c, state_c.ubar, state_c.vbar) == (0.0, True)


def test_energy_report_consistent(coupled, state_c):
    u, v = shifted_pair(state_c)
    rep = energy_report(coupled, state_c, u, v, k0=1.0)
    assert rep.l == pytest.approx(rep.l1 + rep.l2)
    assert rep.gap1 == pytest.approx(rep.d1 - 2 * (1 - coupled.eps) * rep.l1)
    assert set(rep.as_dict()) >= {"e_eps", "l", "d1", "d2"}


def test_refinement_invariance(decoupled):
    vals = []
    for n in (256, 512):
        g = Grid1D(-3, 3, n)
        st0 = solve_stationary(decoupled, g)
        u, v = _shift(st0, 0.3, -0.2)
        vals.append(sum(lyapunov(decoupled, st0, u, v)))
    assert vals[0] == pytest.approx(vals[1], rel=1e-2)
