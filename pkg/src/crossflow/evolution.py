"""Minimizing-movement time stepping in quantile coordinates, an explicit
finite-volume reference integrator, and decay-rate extraction.

Each component is carried by ``nq`` quantile positions. The quantile
function is interpolated linearly between them (and extrapolated by half a
gap at the ends), so mass ``1/nq`` sits uniformly between neighbours; this is
the reconstruction :func:`crossflow.grid.from_quantiles` deposits onto a
grid. The energy of that reconstruction is evaluated exactly, so each step
minimizes a smooth, strictly convex function of the positions (up to the
coupling term) and the metric term is a plain weighted sum of squares.
"""

import io
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from sklearn.isotonic import isotonic_regression

from ._validation import ParameterError, PreconditionError, SolverError, StepError
from .functionals import _edge_gradient, dissipation, energy, lyapunov
from .grid import Density, QuantileRep, breakpoints, cell_masses, from_quantiles, to_quantiles
from .model import coupling_eval

COLUMNS = (
    "t",
    "e_eps",
    "l",
    "l1",
    "l2",
    "d1",
    "d2",
    "w2_step_u",
    "w2_step_v",
    "weak_residual_u",
    "weak_residual_v",
)
ONE_STEP_SLACK = 1e-10


@dataclass(frozen=True)
class JkoConfig:
    tau: float
    t_end: float
    nq: int = 1024
    inner_tol: float = None
    inner_max_iter: int = 200

    def __post_init__(self):
        if not self.tau > 0:
            raise ParameterError("tau must be positive")
        if self.inner_tol is not None and not self.inner_tol > 0:
            raise ParameterError("inner_tol must be positive")
        if self.nq < 2:
            raise ParameterError("nq must be >= 2")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.tau))


# ---------------------------------------------------------------------------
# energy of the quantile reconstruction


def _spread(gb):
    # transpose of the positions -> breakpoints map
    gx = gb[1:-1].copy()
    gx[0] += 1.5 * gb[0]
    gx[1] -= 0.5 * gb[0]
    gx[-1] += 1.5 * gb[-1]
    gx[-2] -= 0.5 * gb[-1]
    return gx


def _breakpoint_matrix(nq):
    rows = [0, 0] + list(range(1, nq + 1)) + [nq + 1, nq + 1]
    cols = [0, 1] + list(range(nq)) + [nq - 1, nq - 2]
    vals = [1.5, -0.5] + [1.0] * nq + [1.5, -0.5]
    return sp.csr_matrix((vals, (rows, cols)), shape=(nq + 2, nq))


def _single_energy(spec, pot, x):
    # internal + potential energy of one component and its breakpoint gradient
    b = breakpoints(x)
    w = np.diff(b)
    if np.any(w <= 0):
        return np.inf, None, None, None
    mu = cell_masses(x.size)
    dens = mu / w
    e = np.sum(w * spec.value(dens)) + np.sum(mu * pot.cell_average(b[:-1], b[1:]))
    press = spec.pressure(dens)
    gb = np.zeros(b.size)
    gb[1:] -= press
    gb[:-1] += press
    da, db = pot.cell_average_grad(b[:-1], b[1:])
    gb[:-1] += mu * da
    gb[1:] += mu * db
    return float(e), gb, b, dens


def _coupling_energy(params, bu, du, bv, dv):
    """Exact integral of ``eps h(u, v)`` over the merged partition, with breakpoint gradients."""
    eps = params.eps
    gbu = np.zeros(bu.size)
    gbv = np.zeros(bv.size)
    if eps == 0 or params.coupling.zero:
        return 0.0, gbu, gbv
    lo, hi = max(bu[0], bv[0]), min(bu[-1], bv[-1])
    if lo >= hi:
        return 0.0, gbu, gbv
    z = np.concatenate([bu, bv])
    src = np.concatenate([np.arange(bu.size), -1 - np.arange(bv.size)])
    order = np.argsort(z, kind="stable")
    z, src = z[order], src[order]
    mids = 0.5 * (z[1:] + z[:-1])
    length = np.diff(z)
    ia = np.searchsorted(bu, mids, side="right") - 1
    ib = np.searchsorted(bv, mids, side="right") - 1
    valid = (ia >= 0) & (ia < du.size) & (ib >= 0) & (ib < dv.size)
    ua = np.where(valid, du[np.clip(ia, 0, du.size - 1)], 0.0)
    vb = np.where(valid, dv[np.clip(ib, 0, dv.size - 1)], 0.0)
    c = params.coupling
    hval = np.asarray(coupling_eval(c, ua, vb, "h"))
    e = eps * float(np.sum(length * hval))
    # moving an endpoint with densities frozen
    gz = np.zeros(z.size)
    gz[1:] += eps * hval
    gz[:-1] -= eps * hval
    is_u = src >= 0
    gbu[src[is_u]] += gz[is_u]
    gbv[-1 - src[~is_u]] += gz[~is_u]
    # density response to the cell widths
    hu = eps * np.asarray(coupling_eval(c, ua, vb, "du")) * length
    hv = eps * np.asarray(coupling_eval(c, ua, vb, "dv")) * length
    su = np.bincount(ia[valid], weights=hu[valid], minlength=du.size)
    sv = np.bincount(ib[valid], weights=hv[valid], minlength=dv.size)
    wu = np.diff(bu)
    wv = np.diff(bv)
    ku = su * du / wu
    kv = sv * dv / wv
    gbu[:-1] += ku
    gbu[1:] -= ku
    gbv[:-1] += kv
    gbv[1:] -= kv
    return e, gbu, gbv


def quantile_energy(params, x, y, with_grad=True):
    """Energy of the reconstructed pair and its gradient in the positions."""
    eu, gbu, bu, du = _single_energy(params.f, params.phi, x)
    ev, gbv, bv, dv = _single_energy(params.g, params.psi, y)
    if not np.isfinite(eu) or not np.isfinite(ev):
        return np.inf, None, None
    ec, cu, cv = _coupling_energy(params, bu, du, bv, dv)
    e = eu + ev + ec
    if not with_grad:
        return e, None, None
    return e, _spread(gbu + cu), _spread(gbv + cv)


def _model_hessian(spec, pot, x, bmat):
    # Hessian of internal + potential energy (coupling left out)
    b = breakpoints(x)
    w = np.diff(b)
    mu = cell_masses(x.size)
    dens = mu / w
    phi2 = dens**2 * np.asarray(spec.deriv2(dens)) / w
    A = b[:-1] - pot.center
    B = b[1:] - pot.center
    haa = np.full(w.size, pot.lambda_conv / 3)
    hab = np.full(w.size, pot.lambda_conv / 6)
    hbb = np.full(w.size, pot.lambda_conv / 3)
    if pot.c4:
        haa = haa + pot.c4 / 5 * (12 * A**2 + 6 * A * B + 2 * B**2)
        hab = hab + pot.c4 / 5 * (3 * A**2 + 4 * A * B + 3 * B**2)
        hbb = hbb + pot.c4 / 5 * (2 * A**2 + 6 * A * B + 12 * B**2)
    diag = np.zeros(b.size)
    diag[:-1] += phi2 + mu * haa
    diag[1:] += phi2 + mu * hbb
    off = -phi2 + mu * hab
    hb = sp.diags([off, diag, off], [-1, 0, 1], format="csr")
    return (bmat.T @ hb @ bmat).tocsc()


# ---------------------------------------------------------------------------
# one minimizing-movement step


@dataclass
class StepInfo:
    iterations: int
    grad_norm: float
    objective: float
    energy_prev: float
    energy_next: float
    w2_u: float
    w2_v: float
    stalled: bool = False


def _project(x):
    if np.all(np.diff(x) > 0):
        return x
    return isotonic_regression(x, increasing=True)


def jko_step_quantiles(params, xhat, yhat, cfg):
    """Minimize ``W^2/(2 tau) + E`` starting from the previous positions.

    Preconditioned descent: the search direction uses the exact Hessian of
    the uncoupled energy plus the metric term; trial points are restored to
    monotone order by isotonic projection and accepted by an Armijo test.
    """
    nq = xhat.size
    tau = cfg.tau
    bmat = _breakpoint_matrix(nq)
    metric = sp.identity(nq, format="csc") / (tau * nq)

    def objective(x, y, with_grad=True):
        e, gx, gy = quantile_energy(params, x, y, with_grad)
        if not np.isfinite(e):
            return np.inf, e, None, None
        dist = (np.sum((x - xhat) ** 2) + np.sum((y - yhat) ** 2)) / nq
        j = e + dist / (2 * tau)
        if not with_grad:
            return j, e, None, None
        return j, e, gx + (x - xhat) / (tau * nq), gy + (y - yhat) / (tau * nq)

    e_prev = quantile_energy(params, xhat, yhat, with_grad=False)[0]
    if not np.isfinite(e_prev):
        raise PreconditionError("previous state has infinite energy (coincident positions)")
    tol = cfg.inner_tol if cfg.inner_tol is not None else 1e-8 * (1 + abs(e_prev))
    x, y = xhat.copy(), yhat.copy()
    j, e, gx, gy = objective(x, y)
    stalled = False
    it = 0
    gnorm = np.inf
    for it in range(1, cfg.inner_max_iter + 1):
        gnorm = float(np.sqrt(nq * (np.sum(gx**2) + np.sum(gy**2))))
        if gnorm <= tol:
            break
        hx = _model_hessian(params.f, params.phi, x, bmat) + metric
        hy = _model_hessian(params.g, params.psi, y, bmat) + metric
        dx_ = -spsolve(hx, gx)
        dy_ = -spsolve(hy, gy)
        slope = float(gx @ dx_ + gy @ dy_)
        if slope >= 0:
            dx_, dy_ = -gx * tau * nq, -gy * tau * nq
            slope = float(gx @ dx_ + gy @ dy_)
        alpha = 1.0
        accepted = False
        while alpha > 1e-14:
            xt = _project(x + alpha * dx_)
            yt = _project(y + alpha * dy_)
            jt, et, gxt, gyt = objective(xt, yt)
            if np.isfinite(jt) and jt <= j + 1e-4 * alpha * slope:
                accepted = True
                break
            # below round-off in J, fall back to decrease of the gradient
            if np.isfinite(jt) and jt <= j + 8 * np.finfo(float).eps * (1 + abs(j)):
                if np.sqrt(nq * (np.sum(gxt**2) + np.sum(gyt**2))) < 0.5 * gnorm:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            stalled = True
            break
        x, y, j, e, gx, gy = xt, yt, jt, et, gxt, gyt
    else:
        gnorm = float(np.sqrt(nq * (np.sum(gx**2) + np.sum(gy**2))))
        if gnorm > tol:
            raise StepError(
                f"inner solver hit {cfg.inner_max_iter} iterations (gradient norm {gnorm:.3e} > {tol:.3e})",
                best=(x, y),
                gap=gnorm,
            )
    w2u = float(np.sqrt(np.mean((x - xhat) ** 2)))
    w2v = float(np.sqrt(np.mean((y - yhat) ** 2)))
    if e + (w2u**2 + w2v**2) / (2 * tau) > e_prev + ONE_STEP_SLACK:
        raise StepError("one-step energy inequality violated", best=(x, y), gap=gnorm)
    info = StepInfo(it, gnorm, j, e_prev, e, w2u, w2v, stalled)
    return x, y, info


def jko_step(params, prev, cfg, grid=None):
    """One minimizing-movement step.

    ``prev`` is a pair of :class:`Density` or of :class:`QuantileRep`; the
    result has the same type. Densities are converted with ``cfg.nq``
    quantiles and deposited back on their own grid (or ``grid``).
    """
    pu, pv = prev
    if isinstance(pu, Density):
        grid = pu.grid if grid is None else grid
        xhat = to_quantiles(pu, cfg.nq).positions
        yhat = to_quantiles(pv, cfg.nq).positions
        x, y, _ = jko_step_quantiles(params, xhat, yhat, cfg)
        return from_quantiles(QuantileRep(x), grid), from_quantiles(QuantileRep(y), grid)
    x, y, _ = jko_step_quantiles(params, pu.positions, pv.positions, cfg)
    return QuantileRep(x), QuantileRep(y)


# ---------------------------------------------------------------------------
# discrete weak formulation


@dataclass(frozen=True)
class TestFunction:
    center: float
    width: float
    __test__ = False

    def value(self, x):
        return np.exp(-0.5 * ((x - self.center) / self.width) ** 2)

    def deriv1(self, x):
        z = (x - self.center) / self.width
        return -z / self.width * np.exp(-0.5 * z**2)

    def deriv2(self, x):
        z = (x - self.center) / self.width
        return (z**2 - 1) / self.width**2 * np.exp(-0.5 * z**2)

    def c2_norm(self):
        # sup|zeta| + sup|zeta'| + sup|zeta''|
        return 1.0 + np.exp(-0.5) / self.width + 1.0 / self.width**2


def default_test_functions(lo, hi, count=5):
    centers = np.linspace(lo, hi, count + 2)[1:-1]
    width = (hi - lo) / (count + 1)
    return [TestFunction(float(c), float(width)) for c in centers]


@dataclass(frozen=True)
class WeakResidual:
    ru: float
    rv: float
    bound: float
    slack: float
    ok: bool

    def __iter__(self):
        return iter((self.ru, self.rv))


def discrete_weak_residual(params, prev, nxt, tau, test_fns=None, energy_drop=None, check=False):
    """Defect of the time-discrete weak form for each component.

    For each test function the defect is
    ``int (u* - u^) / tau zeta + int u* d/dx[F'(u*) + eps d_u h + Phi] zeta'``
    and similarly for v; the maxima over test functions are returned. The
    admissible size is ``||zeta||_C2 * energy_drop`` plus ``10 dx**2``.
    """
    (uh, vh), (us, vs) = prev, nxt
    g = us.grid
    x, dx = g.centers, g.dx
    if test_fns is None:
        test_fns = default_test_functions(g.x_min, g.x_max)
    if energy_drop is None:
        energy_drop = max(energy(params, uh, vh) - energy(params, us, vs), 0.0)
    c = params.coupling
    a, b = us.values, vs.values
    # pressure term integrated by parts, potential term with exact derivative
    pu, pv = params.f.pressure(a), params.g.pressure(b)
    fu = a * params.phi.deriv1(x)
    fv = b * params.psi.deriv1(x)
    if params.eps and not c.zero:
        fu = fu + params.eps * a * _edge_gradient(np.asarray(coupling_eval(c, a, b, "du")), a, dx)
        fv = fv + params.eps * b * _edge_gradient(np.asarray(coupling_eval(c, a, b, "dv")), b, dx)
    slack = 10 * dx**2
    worst_u, worst_v, ok, bound = 0.0, 0.0, True, 0.0
    for z in test_fns:
        zv, z1, z2 = z.value(x), z.deriv1(x), z.deriv2(x)
        ru = np.sum((a - uh.values) * zv / tau + fu * z1 - pu * z2) * dx
        rv = np.sum((b - vh.values) * zv / tau + fv * z1 - pv * z2) * dx
        lim = z.c2_norm() * energy_drop
        bound = max(bound, lim)
        ok &= abs(ru) + abs(rv) <= lim + slack
        worst_u, worst_v = max(worst_u, abs(ru)), max(worst_v, abs(rv))
    if check and not ok:
        raise SolverError("weak-form defect exceeds the remainder bound")
    return WeakResidual(float(worst_u), float(worst_v), float(bound), float(slack), bool(ok))


# ---------------------------------------------------------------------------
# explicit finite-volume reference


def _fv_rates(params, u, v, x, dx):
    # interface velocities and the explicit stability limit for one state
    c, e = params.coupling, params.eps
    bu = params.f.deriv1(u) + params.phi.value(x)
    bv = params.g.deriv1(v) + params.psi.value(x)
    du = u * np.asarray(params.f.deriv2(u))
    dv = v * np.asarray(params.g.deriv2(v))
    if e and not c.zero:
        bu = bu + e * np.asarray(coupling_eval(c, u, v, "du"))
        bv = bv + e * np.asarray(coupling_eval(c, u, v, "dv"))
        cross = e * np.abs(coupling_eval(c, u, v, "duv"))
        du = du + u * (e * np.abs(coupling_eval(c, u, v, "duu")) + cross)
        dv = dv + v * (e * np.abs(coupling_eval(c, u, v, "dvv")) + cross)
    vu, vv = -np.diff(bu) / dx, -np.diff(bv) / dx
    diff = max(float(np.max(du)), float(np.max(dv)), 1e-300)
    speed = max(float(np.max(np.abs(vu))), float(np.max(np.abs(vv))), 1e-300)
    return vu, vv, min(0.25 * dx**2 / diff, 0.5 * dx / speed)


def fv_stable_dt(params, pair):
    g = pair[0].grid
    return _fv_rates(params, pair[0].values, pair[1].values, g.centers, g.dx)[2]


def _fv_flux(dens, vel, dt, dx):
    mob = np.maximum(0.0, 0.5 * (dens[1:] + dens[:-1]))
    flux = vel * mob
    out = np.zeros_like(dens)
    out[:-1] += np.maximum(flux, 0.0)
    out[1:] += np.maximum(-flux, 0.0)
    # limit outgoing fluxes so no cell is overdrawn
    need = out * dt / dx
    scale = np.where(need > dens, dens / np.where(need > 0, need, 1.0), 1.0)
    lim = np.where(flux > 0, flux * scale[:-1], flux * scale[1:])
    new = dens.copy()
    new[:-1] -= dt / dx * lim
    new[1:] += dt / dx * lim
    return np.maximum(new, 0.0)


def fv_oracle_step(params, pair, dt):
    """Explicit conservative update with arithmetic-mean interface mobility."""
    g = pair[0].grid
    u, v = pair[0].values, pair[1].values
    vu, vv, limit = _fv_rates(params, u, v, g.centers, g.dx)
    if dt > limit * (1 + 1e-12):
        raise StepError(f"dt={dt:.3e} violates the stability bound {limit:.3e}")
    return Density.normalized(g, _fv_flux(u, vu, dt, g.dx)), Density.normalized(g, _fv_flux(v, vv, dt, g.dx))


def fv_evolve(params, pair, t_end, safety=0.9):
    """Sub-stepped explicit integration to ``t_end`` with the limit recomputed every step."""
    g = pair[0].grid
    u, v = pair[0].values.copy(), pair[1].values.copy()
    t = 0.0
    while t < t_end - 1e-15:
        vu, vv, limit = _fv_rates(params, u, v, g.centers, g.dx)
        dt = min(safety * limit, t_end - t)
        u, v = _fv_flux(u, vu, dt, g.dx), _fv_flux(v, vv, dt, g.dx)
        t += dt
    return Density.normalized(g, u), Density.normalized(g, v)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class TrajectoryRecord:
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)

    def column(self, name):
        i = COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    def as_array(self):
        return np.array(self.rows, dtype=float).reshape(-1, len(COLUMNS))

    def to_csv(self, extra_header=None):
        head = dict(self.meta)
        if extra_header:
            head.update(extra_header)
        buf = io.StringIO()
        buf.write("# " + json.dumps(head, sort_keys=True) + "\n")
        buf.write(",".join(COLUMNS) + "\n")
        for r in self.rows:
            buf.write(",".join(f"{v:.17g}" for v in r) + "\n")
        return buf.getvalue()


def holder_violation(snapshots, times, e0, tau, slack=0.1):
    """Largest ratio ``W2(t, s) / (sqrt(2 E0) sqrt(|t - s| + tau))`` over logged pairs, per component."""
    c = np.sqrt(2 * max(e0, 0.0)) * (1 + slack)
    t = np.asarray(times)
    worst = 0.0
    for k in range(2):
        q = np.array([s[k] for s in snapshots])
        sq = np.sum(q * q, axis=1)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2 * q @ q.T, 0.0) / q.shape[1]
        lim = c * np.sqrt(np.abs(t[:, None] - t[None, :]) + tau)
        worst = max(worst, float(np.max(np.sqrt(d2) / lim)))
    return worst


def evolve(params, init, cfg, grid=None, state=None, test_fns=None, keep_snapshots=True):
    """Iterate minimizing-movement steps up to ``cfg.t_end`` and log diagnostics.

    ``init`` is a pair of densities (or quantile vectors, then ``grid`` is
    required). Diagnostics are measured on the grid relative to ``state``,
    which is solved on demand.
    """
    from .stationary import solve_stationary

    u0, v0 = init
    if isinstance(u0, Density):
        grid = u0.grid if grid is None else grid
        x = to_quantiles(u0, cfg.nq).positions
        y = to_quantiles(v0, cfg.nq).positions
    else:
        if grid is None:
            raise PreconditionError("grid required for quantile input")
        x, y = u0.positions.copy(), v0.positions.copy()
    if state is None:
        state = solve_stationary(params, grid)
    if test_fns is None:
        lo = min(state.support_u[0], state.support_v[0])
        hi = max(state.support_u[1], state.support_v[1])
        pad = 0.5 * (hi - lo)
        test_fns = default_test_functions(lo - pad, hi + pad)
    e0 = quantile_energy(params, x, y, with_grad=False)[0]
    rec = TrajectoryRecord(
        meta={"tau": cfg.tau, "t_end": cfg.t_end, "nq": cfg.nq, "eps": params.eps, "weak_form_violations": 0}
    )

    def log(t, x, y, e, w2u, w2v, prev_pair):
        du = from_quantiles(QuantileRep(x), grid)
        dv = from_quantiles(QuantileRep(y), grid)
        l1, l2 = lyapunov(params, state, du, dv)
        d1, d2 = dissipation(params, state, du, dv)
        if prev_pair is None:
            wr = (0.0, 0.0)
        else:
            res = discrete_weak_residual(params, prev_pair, (du, dv), cfg.tau, test_fns, energy_drop=prev_e - e)
            wr = (res.ru, res.rv)
            rec.meta["weak_form_violations"] += int(not res.ok)
        rec.rows.append((t, e, l1 + l2, l1, l2, d1, d2, w2u, w2v, wr[0], wr[1]))
        return du, dv

    prev_e = e0
    pair = log(0.0, x, y, e0, 0.0, 0.0, None)
    times = [0.0]
    snaps = [(x.copy(), y.copy())]
    sum_w2 = 0.0
    for k in range(1, cfg.n_steps + 1):
        try:
            x, y, info = jko_step_quantiles(params, x, y, cfg)
        except StepError as exc:
            rec.meta["aborted_at"] = k * cfg.tau
            exc.partial = rec
            raise
        sum_w2 += info.w2_u**2 + info.w2_v**2
        pair = log(k * cfg.tau, x, y, info.energy_next, info.w2_u, info.w2_v, pair)
        prev_e = info.energy_next
        times.append(k * cfg.tau)
        if keep_snapshots:
            snaps.append((x.copy(), y.copy()))
    if prev_e + sum_w2 / (2 * cfg.tau) > e0 + ONE_STEP_SLACK * max(1, cfg.n_steps):
        raise SolverError("telescoped energy estimate violated")
    rec.meta["telescoped_lhs"] = prev_e + sum_w2 / (2 * cfg.tau)
    rec.meta["e0"] = e0
    if keep_snapshots:
        rec.snapshots = snaps
        rec.meta["holder_ratio"] = holder_violation(snaps, times, e0, cfg.tau)
        if rec.meta["holder_ratio"] > 1.0:
            raise SolverError("Hoelder modulus estimate violated")
    rec.final = (QuantileRep(x), QuantileRep(y))
    return rec


def decay_rate_fit(traj, window=None, column="l"):
    """Least-squares decay rate of ``log l`` against ``t`` on the window."""
    t = traj.column("t")
    l = traj.column(column)
    if window is None:
        window = (t[0] + 0.4 * (t[-1] - t[0]), t[-1])
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12) & (l > 0)
    if np.count_nonzero(sel) < 5:
        raise PreconditionError("need at least 5 positive samples in the fit window")
    slope = np.polyfit(t[sel], np.log(l[sel]), 1)[0]
    return float(-slope)


def contraction_ratios(traj):
    """Per-step ratios ``l(t_n) / l(t_{n-1})``."""
    l = traj.column("l")
    return l[1:] / np.where(l[:-1] > 0, l[:-1], np.inf)


def fit_rate_constant(eps_values, rates, lambda_conv):
    """Smallest ``K >= 0`` with ``rate(eps) >= 2 (Lambda - K eps)`` for every positive ``eps``."""
    k = 0.0
    for e, r in zip(eps_values, rates):
        if e > 0:
            k = max(k, (2 * lambda_conv - r) / (2 * e))
    return float(k)
