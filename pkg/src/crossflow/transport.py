"""Quadratic Wasserstein distance in one dimension via monotone rearrangement,
displacement interpolation, and a small linear-programming oracle."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from ._validation import DomainError, PreconditionError
from .grid import QuantileRep, from_quantiles, to_quantiles
from .model import coupling_eval

MAX_ORACLE_ATOMS = 128


def _quantiles_pair(u, w, nq):
    if u.grid != w.grid:
        raise PreconditionError("densities must share a grid")
    nq = u.grid.n if nq is None else nq
    return to_quantiles(u, nq).positions, to_quantiles(w, nq).positions


def w2(u, w, nq=None):
    """W2 distance from matched quantiles at ``s_j = (j + 1/2) / nq``."""
    xu, xw = _quantiles_pair(u, w, nq)
    return float(np.sqrt(np.mean((xu - xw) ** 2)))


def w2_quantiles(qa, qb):
    """W2 distance between two quantile vectors of equal length."""
    return float(np.sqrt(np.mean((qa.positions - qb.positions) ** 2)))


def w2_atoms(src_pos, src_w, tgt_pos, tgt_w):
    """Exact W2 between weighted point masses by monotone rearrangement.

    Both quantile functions are piecewise constant; they are compared on the
    merged set of cumulative-weight levels.
    """
    xs, a = _atoms(src_pos, src_w)
    ys, b = _atoms(tgt_pos, tgt_w)
    ia, ib = np.argsort(xs, kind="stable"), np.argsort(ys, kind="stable")
    ca, cb = np.cumsum(a[ia]), np.cumsum(b[ib])
    levels = np.union1d(np.concatenate([[0.0], ca[:-1], cb[:-1]]), [1.0])
    mids = 0.5 * (levels[1:] + levels[:-1])
    qa = xs[ia][np.minimum(np.searchsorted(ca, mids), xs.size - 1)]
    qb = ys[ib][np.minimum(np.searchsorted(cb, mids), ys.size - 1)]
    return float(np.sqrt(np.sum(np.diff(levels) * (qa - qb) ** 2)))


def w2_product(u, v, u_hat, v_hat, nq=None):
    return float(np.hypot(w2(u, u_hat, nq), w2(v, v_hat, nq)))


def geodesic(u, w, s, nq=None):
    """Displacement interpolant ``((1-s) X_u + s X_w)`` pushed back to the grid."""
    if not 0.0 <= s <= 1.0:
        raise DomainError("s must lie in [0, 1]")
    xu, xw = _quantiles_pair(u, w, nq)
    return from_quantiles(QuantileRep((1 - s) * xu + s * xw), u.grid)


@dataclass(frozen=True)
class TransportPlanSmall:
    source_positions: np.ndarray
    source_weights: np.ndarray
    target_positions: np.ndarray
    target_weights: np.ndarray
    coupling: np.ndarray

    def marginal_error(self):
        e1 = np.max(np.abs(self.coupling.sum(axis=1) - self.source_weights))
        e2 = np.max(np.abs(self.coupling.sum(axis=0) - self.target_weights))
        return float(max(e1, e2))

    def cost(self):
        d = self.source_positions[:, None] - self.target_positions[None, :]
        return float(np.sum(self.coupling * 0.5 * d**2))


def _atoms(pos, wts):
    pos = np.asarray(pos, dtype=float).ravel()
    wts = np.ones(pos.size) if wts is None else np.asarray(wts, dtype=float).ravel()
    if pos.size != wts.size or pos.size == 0:
        raise PreconditionError("positions and weights must be nonempty and of equal length")
    if np.any(wts < 0) or not wts.sum() > 0:
        raise PreconditionError("weights must be nonnegative with positive total")
    return pos, wts / wts.sum()


def _normalize_atoms(pos, wts):
    pos, wts = _atoms(pos, wts)
    if pos.size > MAX_ORACLE_ATOMS:
        raise PreconditionError(f"oracle limited to {MAX_ORACLE_ATOMS} atoms per side")
    return pos, wts


def solve_plan(src_pos, src_w, tgt_pos, tgt_w):
    """Optimal plan for the cost ``|x - y|**2 / 2``.

    Equal-size uniform inputs use sorted matching; anything else is solved
    as a transportation LP.
    """
    xs, a = _normalize_atoms(src_pos, src_w)
    ys, b = _normalize_atoms(tgt_pos, tgt_w)
    k, l = xs.size, ys.size
    if k == l and np.allclose(a, 1.0 / k, rtol=0, atol=1e-15) and np.allclose(b, 1.0 / l, rtol=0, atol=1e-15):
        plan = np.zeros((k, l))
        plan[np.argsort(xs, kind="stable"), np.argsort(ys, kind="stable")] = 1.0 / k
        return TransportPlanSmall(xs, a, ys, b, plan)
    cost = 0.5 * (xs[:, None] - ys[None, :]) ** 2
    rows = np.zeros((k, k * l))
    cols = np.zeros((l, k * l))
    for i in range(k):
        rows[i, i * l : (i + 1) * l] = 1.0
    for j in range(l):
        cols[j, j::l] = 1.0
    res = linprog(
        cost.ravel(),
        A_eq=np.vstack([rows, cols]),
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise PreconditionError(f"transport LP failed: {res.message}")
    return TransportPlanSmall(xs, a, ys, b, np.maximum(res.x.reshape(k, l), 0.0))


def w2_oracle_lp(src_pos, src_w, tgt_pos, tgt_w):
    """Exact discrete W2, ``sqrt(2 * cost)`` under the half-squared cost."""
    plan = solve_plan(src_pos, src_w, tgt_pos, tgt_w)
    return float(np.sqrt(2.0 * plan.cost()))


def _smooth_step(t):
    # C-infinity transition from 0 (t <= 0) to 1 (t >= 1)
    t = np.clip(t, 0.0, 1.0)
    a = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.maximum(1 - t, 1e-300)), 0.0)
    return a / (a + b)


def cutoff(x, r):
    """Smooth radial cutoff: 1 on ``|x| < r/2``, 0 on ``|x| > r``."""
    return _smooth_step((r - np.abs(x)) / (0.5 * r))


def oscillating_pair(params, omega, r, base=(1.0, 1.0)):
    """Callables for the oscillating pair built on constant plateaus ``base`` on ``|x| < r``.

    Returns ``(u_fn, v_fn, sign, cross)`` where ``sign`` is the orientation of
    the v-oscillation (matched to the sign of the cross partial ``cross``).
    """
    big_u, big_v = base
    cross = float(coupling_eval(params.coupling, big_u, big_v, "duv"))
    sign = -1.0 if cross < 0 else 1.0
    amp = omega**-0.5

    def u_fn(x):
        return big_u * cutoff(x, 2 * r) + amp * cutoff(x, r) * np.sin(omega * x)

    def v_fn(x):
        return big_v * cutoff(x, 2 * r) + sign * amp * cutoff(x, r) * np.sin(omega * x)

    return u_fn, v_fn, sign, cross


def nonconvexity_profile(params, omega, r, s_values, base=(1.0, 1.0), points_per_period=64):
    """Integral of ``F(u) + G(v) + eps h(u, v)`` with u translated by each ``s``.

    The internal energy is translation invariant, so only the coupling term
    can bend the profile.
    """
    u_fn, v_fn, _, cross = oscillating_pair(params, omega, r, base)
    if cross == 0.0:
        warnings.warn("cross partial of h vanishes at the base point", RuntimeWarning, stacklevel=2)
    if omega**-0.5 > min(base):
        raise PreconditionError("omega too small: oscillation would make the densities negative")
    s_values = np.asarray(s_values, dtype=float)
    half = 2 * r + np.max(np.abs(s_values)) + 1e-9
    n = int(np.ceil(2 * half * omega / (2 * np.pi) * points_per_period)) + 1
    n = max(n, 4001)
    x = np.linspace(-half, half, n)
    dx = x[1] - x[0]
    v = np.maximum(v_fn(x), 0.0)
    out = []
    for s in s_values:
        u = np.maximum(u_fn(x - s), 0.0)
        dens = params.f.value(u) + params.g.value(v) + params.eps * coupling_eval(params.coupling, u, v, "h")
        out.append(float(np.sum(dens) * dx))
    return out


def nonconvexity_second_difference(params, omega, r=0.5, ds=None, base=(1.0, 1.0)):
    """Centered second difference at ``s = 0`` of :func:`nonconvexity_profile`."""
    ds = 0.05 / omega if ds is None else ds
    lo, mid, hi = nonconvexity_profile(params, omega, r, [-ds, 0.0, ds], base)
    return (hi - 2 * mid + lo) / ds**2
