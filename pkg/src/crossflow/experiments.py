"""Reusable experiment drivers: perturbed initial data, parameter sweeps."""

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .evolution import decay_rate_fit, evolve, fit_rate_constant
from .grid import density_from_fn
from .stationary import solve_stationary
from .transport import nonconvexity_second_difference


def _profile(d):
    x, vals = d.grid.centers, d.values
    return lambda y: np.interp(y, x, vals, left=0.0, right=0.0)


def shifted_pair(state, shift=(0.3, -0.2), amplitude=0.3, freq=3.0):
    """Stationary profiles translated by ``shift``, u modulated by ``1 + amplitude sin(freq x)``."""
    g = state.grid
    fu, fv = _profile(state.ubar), _profile(state.vbar)
    u = density_from_fn(g, lambda x: fu(x - shift[0]) * np.maximum(1 + amplitude * np.sin(freq * x), 0.0))
    v = density_from_fn(g, lambda x: fv(x - shift[1]))
    return u, v


def random_pair(state, rng, max_amplitude=0.3, max_shift=0.5, modes=4):
    """Random translation, dilation and Fourier modulation of the stationary pair."""
    g = state.grid
    out = []
    for d in (state.ubar, state.vbar):
        f = _profile(d)
        a = rng.uniform(-max_shift, max_shift)
        s = rng.uniform(0.7, 1.4)
        c = rng.normal(size=modes) * rng.uniform(0, max_amplitude)
        k = np.arange(1, modes + 1) * 1.3

        def fn(y, f=f, a=a, s=s, c=c):
            z = (np.asarray(y) - a) * s
            mod = 1 + np.sin(np.multiply.outer(z, k)) @ c
            return f(z) * np.maximum(mod, 0.1)

        out.append(density_from_fn(g, fn))
    return tuple(out)


def perturbation_suite(state, count=100, seed=0, **kw):
    rng = np.random.default_rng(seed)
    return [random_pair(state, rng, **kw) for _ in range(count)]


def _rate_point(args):
    params, grid, cfg, shift, amplitude = args
    state = solve_stationary(params, grid)
    init = shifted_pair(state, shift, amplitude)
    traj = evolve(params, init, cfg, state=state, keep_snapshots=False)
    return params.eps, decay_rate_fit(traj), traj


def rate_sweep(params, grid, cfg, eps_values, shift=(0.3, -0.2), amplitude=0.3, workers=1):
    """Fitted decay rate per coupling strength, sorted by ``eps``, plus the fitted constant."""
    jobs = [(params.with_eps(e), grid, cfg, shift, amplitude) for e in sorted(eps_values)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(_rate_point, jobs))
    else:
        res = [_rate_point(j) for j in jobs]
    res.sort(key=lambda r: r[0])
    lam = params.lambda_conv
    rows = [(e, r, 2 * lam - r) for e, r, _ in res]
    k_hat = fit_rate_constant([r[0] for r in rows], [r[1] for r in rows], lam)
    return rows, k_hat, [t for _, _, t in res]


def nonconvexity_table(params, omegas, r=0.5, base=(1.0, 1.0)):
    return [(float(w), nonconvexity_second_difference(params, w, r, base=base)) for w in sorted(omegas)]
