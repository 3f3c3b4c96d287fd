import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossflow._validation import DegenerateInputError, ParameterError, PreconditionError
from crossflow.grid import (
    Density,
    Grid1D,
    QuantileRep,
    breakpoints,
    cell_masses,
    density_from_csv,
    density_from_fn,
    density_to_csv,
    from_quantiles,
    mass,
    reconstruction_cdf,
    second_moment,
    to_quantiles,
)


def indicator(a, b):
    return lambda x: ((x >= a) & (x <= b)).astype(float)


def test_grid_geometry():
    g = Grid1D(-1.0, 1.0, 16)
    assert g.dx == pytest.approx(0.125)
    np.testing.assert_allclose(g.centers, -1 + (np.arange(16) + 0.5) * 0.125)
    with pytest.raises(ParameterError):
        Grid1D(0, 1, 8)
    with pytest.raises(ParameterError):
        Grid1D(1, 0, 32)


def test_indicator_density():
    g = Grid1D(-2, 2, 400)
    d = density_from_fn(g, indicator(0, 1))
    inside = (g.centers > 0) & (g.centers < 1)
    np.testing.assert_allclose(d.values[inside], 1.0, rtol=1e-12)
    assert np.all(d.values[(g.centers < 0) | (g.centers > 1)] == 0)


def test_zero_function_is_degenerate():
    with pytest.raises(DegenerateInputError):
        density_from_fn(Grid1D(0, 1, 32), lambda x: 0 * x)


def test_density_rejects_bad_values():
    g = Grid1D(0, 1, 16)
    with pytest.raises(ValueError):
        Density(g, -np.ones(16))
    with pytest.raises(ValueError):
        Density(g, np.full(16, 2.0))


def test_moments():
    g = Grid1D(-2, 2, 400)
    u = density_from_fn(g, indicator(0, 1))
    assert mass(u) == pytest.approx(1.0, abs=1e-9)
    assert second_moment(u, 0.5) == pytest.approx(1 / 12, rel=1e-4)
    hot = np.zeros(400)
    hot[np.argmin(np.abs(g.centers - 2 + g.dx / 2))] = 1
    spike = Density.normalized(g, hot)
    assert second_moment(spike, 0.0) == pytest.approx(4.0, rel=1e-2)


def test_uniform_quantiles():
    g = Grid1D(-2, 2, 400)
    q = to_quantiles(density_from_fn(g, indicator(0, 1)), 4)
    np.testing.assert_allclose(q.positions, [0.125, 0.375, 0.625, 0.875], atol=1e-12)


def test_quantile_translation():
    g = Grid1D(-4, 4, 800)
    a = 0.73
    bump = lambda x: np.exp(-4 * x**2)
    q0 = to_quantiles(density_from_fn(g, bump), 256).positions
    q1 = to_quantiles(density_from_fn(g, lambda x: bump(x - a)), 256).positions
    np.testing.assert_allclose(q1 - q0, a, atol=2 * g.dx)


def test_round_trip_barenblatt():
    g = Grid1D(-3, 3, 1024)
    u = density_from_fn(g, lambda x: np.maximum(0.655 - x**2 / 2, 0))
    back = from_quantiles(to_quantiles(u, 1024), g)
    assert np.sum(np.abs(back.values - u.values)) * g.dx <= 1e-2


@pytest.mark.parametrize("n,nq", [(128, 128), (256, 512), (512, 256)])
def test_round_trip_bound(n, nq):
    g = Grid1D(-3, 3, n)
    u = density_from_fn(g, lambda x: np.exp(-((x - 0.3) ** 2)) * (1 + 0.5 * np.sin(3 * x)))
    back = from_quantiles(to_quantiles(u, nq), g)
    assert np.sum(np.abs(back.values - u.values)) * g.dx <= 4 / nq + 4 / n


def test_round_trip_first_order():
    errs = []
    for n in (128, 256, 512, 1024):
        g = Grid1D(-3, 3, n)
        u = density_from_fn(g, lambda x: np.maximum(0.655 - x**2 / 2, 0))
        back = from_quantiles(to_quantiles(u, n), g)
        errs.append(np.sum(np.abs(back.values - u.values)) * g.dx)
    assert errs == sorted(errs, reverse=True)
    assert errs[-1] < errs[0] / 4


def test_reconstruction_masses():
    x = np.array([0.0, 1.0, 3.0])
    b = breakpoints(x)
    np.testing.assert_allclose(b, [-0.5, 0.0, 1.0, 3.0, 4.0])
    np.testing.assert_allclose(cell_masses(3), [1 / 6, 1 / 3, 1 / 3, 1 / 6])
    np.testing.assert_allclose(reconstruction_cdf(x, b), [0, 1 / 6, 0.5, 5 / 6, 1])


def test_to_quantiles_rejects_tiny_nq():
    with pytest.raises(PreconditionError):
        to_quantiles(density_from_fn(Grid1D(0, 1, 16), lambda x: 1 + 0 * x), 1)


def test_quantile_rep_must_be_sorted():
    with pytest.raises(ValueError):
        QuantileRep(np.array([0.0, 1.0, 0.5]))


def test_csv_round_trip():
    g = Grid1D(-1, 1, 32)
    u = density_from_fn(g, lambda x: 1 + x)
    v = density_from_csv(density_to_csv(u))
    assert v.grid == g
    np.testing.assert_allclose(v.values, u.values, rtol=1e-15)


@st.composite
def densities(draw):
    n = draw(st.integers(16, 200))
    vals = np.array(draw(st.lists(st.floats(0, 10), min_size=n, max_size=n)))
    if vals.sum() <= 1e-9:
        vals[draw(st.integers(0, n - 1))] = 1.0
    return Density.normalized(Grid1D(-1, 2, n), vals)


@settings(max_examples=60, deadline=None)
@given(densities(), st.integers(2, 300))
def test_quantiles_nondecreasing_and_mass_preserved(d, nq):
    q = to_quantiles(d, nq)
    assert np.all(np.diff(q.positions) >= 0)
    assert d.grid.x_min <= q.positions[0] and q.positions[-1] <= d.grid.x_max
    back = from_quantiles(q, d.grid)
    assert mass(back) == pytest.approx(1.0, abs=1e-9)
    assert np.all(back.values >= 0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(0.2, 1.0))
def test_refinement_invariance(c, w):
    vals = []
    for n in (256, 512):
        g = Grid1D(-3, 3, n)
        d = density_from_fn(g, lambda x: np.exp(-((x - c) ** 2) / (2 * w**2)))
        vals.append((mass(d), second_moment(d, 0.0)))
    assert vals[0][0] == pytest.approx(vals[1][0], abs=1e-9)
    assert vals[0][1] == pytest.approx(vals[1][1], abs=10 * (6 / 256) ** 2)
