"""Stationary pair: the minimizer of the energy, found from the pointwise
Euler-Lagrange system with two mass multipliers."""

import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._validation import ConfigurationError, ParameterError, SolverError
from .grid import Density
from .model import coupling_eval, density_cap_for, eps_star, theta_eval

NEWTON_MAX_ITER = 100
CELL_TOL = 1e-12
MASS_TOL = 1e-13
WINDOW_MARGIN = 0.2


@dataclass(frozen=True)
class StationaryState:
    ubar: Density
    vbar: Density
    u_eps: float
    v_eps: float
    support_u: tuple
    support_v: tuple
    theta_bar_u: np.ndarray
    theta_bar_v: np.ndarray
    density_cap: float
    eps: float = 0.0
    info: dict = field(default_factory=dict, compare=False)

    @property
    def grid(self):
        return self.ubar.grid

    def header(self):
        return {
            "eps": self.eps,
            "u_eps": self.u_eps,
            "v_eps": self.v_eps,
            "density_cap": self.density_cap,
            "support_u": list(self.support_u),
            "support_v": list(self.support_v),
        }

    def to_csv(self, extra_header=None):
        head = dict(self.header())
        if extra_header:
            head.update(extra_header)
        buf = io.StringIO()
        buf.write("# " + json.dumps(head, sort_keys=True) + "\n")
        buf.write("x,ubar,vbar,theta_bar_u,theta_bar_v\n")
        cols = (self.grid.centers, self.ubar.values, self.vbar.values, self.theta_bar_u, self.theta_bar_v)
        for row in zip(*cols):
            buf.write(",".join(f"{c:.17g}" for c in row) + "\n")
        return buf.getvalue()


def compute_density_cap(params):
    """Uniform bound on stationary densities, using the model's eps_star."""
    return density_cap_for(params, eps_star(params))


def _gamma(params, rho, eta):
    c, f, g, e = params.coupling, params.f, params.g, params.eps
    return rho + e * theta_eval(c, f, g, rho, eta, "u"), eta + e * theta_eval(c, f, g, rho, eta, "v")


def gamma_jacobian(params, rho, eta):
    """Entries ``(a, b, c, d)`` of the Jacobian ``[[a, b], [c, d]]`` of the pressure map."""
    c, f, g, e = params.coupling, params.f, params.g, params.eps
    a = 1 + e * np.asarray(theta_eval(c, f, g, rho, eta, "u_rho"))
    b = e * np.asarray(theta_eval(c, f, g, rho, eta, "u_eta"))
    cc = e * np.asarray(theta_eval(c, f, g, rho, eta, "v_rho"))
    d = 1 + e * np.asarray(theta_eval(c, f, g, rho, eta, "v_eta"))
    return a, b, cc, d


def invert_pressure_map(params, rho_t, eta_t):
    """Vectorized damped Newton solve of ``Gamma(rho, eta) = (rho_t, eta_t)``."""
    rho_t = np.atleast_1d(np.asarray(rho_t, dtype=float)).copy()
    eta_t = np.atleast_1d(np.asarray(eta_t, dtype=float)).copy()
    rho, eta = rho_t.copy(), eta_t.copy()
    if params.eps == 0 or params.coupling.zero:
        return rho, eta
    # on the axes the map is the identity
    act = (rho_t > 0) & (eta_t > 0)
    tol = CELL_TOL * np.maximum(1.0, np.maximum(rho_t, eta_t))
    for _ in range(NEWTON_MAX_ITER):
        if not np.any(act):
            break
        r, s = rho[act], eta[act]
        gr, gs = _gamma(params, r, s)
        fr, fs = gr - rho_t[act], gs - eta_t[act]
        res = np.maximum(np.abs(fr), np.abs(fs))
        done = res <= tol[act]
        a, b, c, d = gamma_jacobian(params, r, s)
        det = a * d - b * c
        dr = -(d * fr - b * fs) / det
        ds = -(-c * fr + a * fs) / det
        alpha = np.ones_like(r)
        new_r, new_s = r + dr, s + ds
        for _ in range(60):
            bad = (new_r <= 0) | (new_s <= 0)
            ok = ~bad
            if np.any(ok):
                nr, ns = _gamma(params, np.where(ok, new_r, r), np.where(ok, new_s, s))
                new_res = np.maximum(np.abs(nr - rho_t[act]), np.abs(ns - eta_t[act]))
                bad |= new_res > res
            bad &= ~done
            if not np.any(bad):
                break
            alpha = np.where(bad, 0.5 * alpha, alpha)
            new_r = np.where(bad, r + alpha * dr, new_r)
            new_s = np.where(bad, s + alpha * ds, new_s)
        new_r = np.where(done, r, new_r)
        new_s = np.where(done, s, new_s)
        idx = np.flatnonzero(act)
        rho[idx], eta[idx] = new_r, new_s
        act[idx[done]] = False
    if np.any(act):
        i = np.flatnonzero(act)[0]
        raise SolverError(f"pressure-map inversion did not converge for target ({rho_t[i]!r}, {eta_t[i]!r})")
    return rho, eta


def invert_dh(params, rho_t, eta_t):
    """Densities ``(u, v)`` solving ``DH(u, v) = (rho_t, eta_t)``."""
    rho, eta = invert_pressure_map(params, rho_t, eta_t)
    u = params.f.inverse_deriv1(rho)
    v = params.g.inverse_deriv1(eta)
    if np.ndim(rho_t) == 0 and np.ndim(eta_t) == 0:
        return float(np.ravel(u)[0]), float(np.ravel(v)[0])
    return np.asarray(u), np.asarray(v)


def _profiles(params, grid, big_u, big_v):
    x = grid.centers
    rho_t = np.maximum(big_u - params.phi.value(x), 0.0)
    eta_t = np.maximum(big_v - params.psi.value(x), 0.0)
    u, v = invert_dh(params, rho_t, eta_t)
    return u, v


def _masses(params, grid, big_u, big_v):
    u, v = _profiles(params, grid, big_u, big_v)
    return np.array([u.sum() * grid.dx - 1.0, v.sum() * grid.dx - 1.0])


def _decoupled_level(spec, pot, grid):
    x = grid.centers

    def res(level):
        return np.sum(spec.inverse_deriv1(np.maximum(level - pot.value(x), 0.0))) * grid.dx - 1.0

    hi = 1.0
    while res(hi) < 0:
        hi *= 2
        if hi > 1e12:
            raise ConfigurationError("window cannot hold unit mass")
    return brentq(res, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def check_window(params, grid, big_u, big_v, margin=WINDOW_MARGIN):
    su = params.phi.sublevel(big_u)
    sv = params.psi.sublevel(big_v)
    lo, hi = min(su[0], sv[0]), max(su[1], sv[1])
    pad = margin * (hi - lo)
    if grid.x_min > lo - pad or grid.x_max < hi + pad:
        raise ConfigurationError(
            f"window [{grid.x_min}, {grid.x_max}] too small for supports; "
            f"use at least [{lo - pad:.4g}, {hi + pad:.4g}]"
        )
    return su, sv


def _newton_levels(params, grid, start):
    z = np.array(start, dtype=float)
    r = _masses(params, grid, *z)
    for _ in range(NEWTON_MAX_ITER):
        if np.max(np.abs(r)) <= MASS_TOL:
            return z
        jac = np.empty((2, 2))
        for k in range(2):
            h = 1e-7 * max(1.0, abs(z[k]))
            zp = z.copy()
            zp[k] += h
            jac[:, k] = (_masses(params, grid, *zp) - r) / h
        try:
            step = -np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            return None
        alpha = 1.0
        while alpha > 1e-6:
            zn = z + alpha * step
            if np.all(zn > 0):
                rn = _masses(params, grid, *zn)
                if np.max(np.abs(rn)) < np.max(np.abs(r)):
                    break
            alpha *= 0.5
        else:
            return None
        z, r = zn, rn
    return z if np.max(np.abs(r)) <= MASS_TOL else None


def _bisection_levels(params, grid, start):
    def level_v(big_u):
        def f(big_v):
            return _masses(params, grid, big_u, big_v)[1]

        hi = max(start[1], 1e-3)
        while f(hi) < 0:
            hi *= 2
        return brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def g(big_u):
        return _masses(params, grid, big_u, level_v(big_u))[0]

    hi = max(start[0], 1e-3)
    while g(hi) < 0:
        hi *= 2
    big_u = brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return np.array([big_u, level_v(big_u)])


def solve_stationary(params, grid):
    """Solve for ``(ubar, vbar)`` and the multipliers on ``grid``."""
    if params.f.m < 2 or params.g.m < 2:
        raise ParameterError("stationary solver needs exponents m, n >= 2")
    start = (_decoupled_level(params.f, params.phi, grid), _decoupled_level(params.g, params.psi, grid))
    check_window(params, grid, *start)
    method = "newton"
    z = _newton_levels(params, grid, start)
    if z is None:
        method = "bisection"
        z = _bisection_levels(params, grid, start)
    big_u, big_v = map(float, z)
    su, sv = check_window(params, grid, big_u, big_v)
    u, v = _profiles(params, grid, big_u, big_v)
    masses = _masses(params, grid, big_u, big_v)
    if np.max(np.abs(masses)) > 1e-8:
        raise SolverError(f"mass constraint not met: {masses}")
    cap = compute_density_cap(params) if not params.coupling.zero else density_cap_for(params, 0.0)
    return StationaryState(
        ubar=Density(grid, u),
        vbar=Density(grid, v),
        u_eps=big_u,
        v_eps=big_v,
        support_u=tuple(map(float, su)),
        support_v=tuple(map(float, sv)),
        theta_bar_u=np.asarray(coupling_eval(params.coupling, u, v, "du"), dtype=float),
        theta_bar_v=np.asarray(coupling_eval(params.coupling, u, v, "dv"), dtype=float),
        density_cap=float(cap),
        eps=float(params.eps),
        info={"method": method},
    )


def stationary_residual(params, state):
    """Max-norm residual of the Euler-Lagrange system over all cells."""
    x = state.grid.centers
    u, v = state.ubar.values, state.vbar.values
    c = params.coupling
    ru = params.f.deriv1(u) + params.eps * coupling_eval(c, u, v, "du") - np.maximum(state.u_eps - params.phi.value(x), 0)
    rv = params.g.deriv1(v) + params.eps * coupling_eval(c, u, v, "dv") - np.maximum(state.v_eps - params.psi.value(x), 0)
    return float(max(np.max(np.abs(ru)), np.max(np.abs(rv))))


def _interior(mask, pad):
    out = mask.copy()
    for k in range(1, pad + 1):
        out[k:] &= mask[:-k]
        out[:-k] &= mask[k:]
    return out


def regularity_diagnostics(params, state, pad=3, window=4):
    """Finite-difference smoothness of the pressure ``F'(ubar)`` on its support.

    Reports sup-norms of first and second differences on the support interior
    and, at each edge of the other component's support lying inside it, the
    largest second difference nearby and the jump of the one-sided slopes.
    """
    dx = state.grid.dx
    out = {}
    for name, spec, own, other in (
        ("u", params.f, state.ubar.values, state.vbar.values),
        ("v", params.g, state.vbar.values, state.ubar.values),
    ):
        rho = np.asarray(spec.deriv1(own))
        inside = _interior(own > 0, pad)
        d1 = np.zeros_like(rho)
        d2 = np.zeros_like(rho)
        d1[1:-1] = (rho[2:] - rho[:-2]) / (2 * dx)
        d2[1:-1] = (rho[2:] - 2 * rho[1:-1] + rho[:-2]) / dx**2
        d3 = np.zeros_like(rho)
        d3[1:-2] = (rho[3:] - 3 * rho[2:-1] + 3 * rho[1:-2] - rho[:-3]) / dx**3
        edges = np.flatnonzero(np.diff((other > 0).astype(int)) != 0)
        spike, jump, d2_jump, d3_max = 0.0, 0.0, 0.0, 0.0
        for e in edges:
            lo, hi = e - window, e + window + 1
            if lo < 2 or hi > rho.size - 2 or not np.all(inside[lo - 2 : hi + 2]):
                continue
            spike = max(spike, float(np.max(np.abs(d2[lo:hi]))))
            left = (rho[lo] - rho[lo - 2]) / (2 * dx)
            right = (rho[hi + 1] - rho[hi - 1]) / (2 * dx)
            jump = max(jump, float(abs(right - left)))
            # nearest second differences that do not straddle the edge
            d2_jump = max(d2_jump, float(abs(d2[e + 2] - d2[e - 1])))
            d3_max = max(d3_max, float(np.max(np.abs(d3[lo:hi]))))
        out[name] = {
            "sup_d1": float(np.max(np.abs(d1[inside]))) if np.any(inside) else 0.0,
            "sup_d2": float(np.max(np.abs(d2[inside]))) if np.any(inside) else 0.0,
            "interface_d2": spike,
            "interface_slope_jump": jump,
            "interface_d2_jump": d2_jump,
            "interface_d3": d3_max,
        }
    return out
