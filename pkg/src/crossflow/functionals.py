"""Scalar functionals on density pairs: energy, entropy, the Lyapunov
functional relative to a stationary pair, dissipation, and the inequality
diagnostics built from them. All integrals use the midpoint rule on the grid.
"""

from dataclasses import asdict, dataclass

import numpy as np

from ._validation import PreconditionError, as_nonneg, scalar_or_array
from .grid import second_moment
from .model import coupling_eval, theta_eval

ZERO_L = 1e-12


@dataclass(frozen=True)
class EnergyReport:
    e_eps: float
    entropy_sum: float
    l1: float
    l2: float
    l: float
    d1: float
    d2: float
    gap1: float
    gap2: float

    def as_dict(self):
        return asdict(self)


def _same_grid(*dens):
    g = dens[0].grid
    for d in dens[1:]:
        if d.grid != g:
            raise PreconditionError("densities live on different grids")
    return g


def energy(params, u, v):
    g = _same_grid(u, v)
    x = g.centers
    a, b = u.values, v.values
    dens = params.f.value(a) + params.g.value(b) + a * params.phi.value(x) + b * params.psi.value(x)
    if params.eps:
        dens = dens + params.eps * coupling_eval(params.coupling, a, b, "h")
    return float(np.sum(dens) * g.dx)


def entropy(u):
    a = u.values
    safe = np.where(a > 0, a, 1.0)
    return float(np.sum(a * np.log(safe)) * u.grid.dx)


def entropy_lower_bound(u, beta, center=0.0, dim=1):
    """``1 - (pi/beta)**(d/2) - beta * second moment about center``."""
    return 1.0 - (np.pi / beta) ** (dim / 2) - beta * second_moment(u, center)


def bregman(spec, s, sbar):
    s = as_nonneg(s, "s")
    sbar = as_nonneg(sbar, "sbar")
    out = spec.value(s) - spec.value(sbar) - (s - sbar) * spec.deriv1(sbar)
    return scalar_or_array(np.maximum(out, 0.0))


def _check_state(state, u, v):
    if state.grid != _same_grid(u, v):
        raise PreconditionError("state and densities live on different grids")


def lyapunov_parts(params, state, u, v):
    """Both Lyapunov parts from the Bregman form."""
    _check_state(state, u, v)
    x = state.grid.centers
    dx = state.grid.dx
    a, b = u.values, v.values
    l1 = np.sum(bregman(params.f, a, state.ubar.values) + a * np.maximum(params.phi.value(x) - state.u_eps, 0)) * dx
    l2 = np.sum(bregman(params.g, b, state.vbar.values) + b * np.maximum(params.psi.value(x) - state.v_eps, 0)) * dx
    return float(l1), float(l2)


def lyapunov_alt(params, state, u, v):
    """Lyapunov parts as energy differences with frozen coupling fields."""
    _check_state(state, u, v)
    x = state.grid.centers
    dx = state.grid.dx
    eps = params.eps
    wu = params.phi.value(x) + eps * state.theta_bar_u
    wv = params.psi.value(x) + eps * state.theta_bar_v
    ub, vb = state.ubar.values, state.vbar.values
    l1 = np.sum(params.f.value(u.values) + wu * u.values) * dx - np.sum(params.f.value(ub) + wu * ub) * dx
    l2 = np.sum(params.g.value(v.values) + wv * v.values) * dx - np.sum(params.g.value(vb) + wv * vb) * dx
    return float(l1), float(l2)


def lyapunov(params, state, u, v, rtol=1e-6, atol=1e-10):
    """``(l1, l2)``; raises if the two closed forms disagree."""
    l1, l2 = lyapunov_parts(params, state, u, v)
    a1, a2 = lyapunov_alt(params, state, u, v)
    for x, y in ((l1, a1), (l2, a2)):
        if abs(x - y) > rtol * max(abs(x), abs(y)) + atol:
            raise PreconditionError(f"Lyapunov forms disagree ({x!r} vs {y!r}); state does not match params")
    return l1, l2


def energy_relation_correction(params, state, u, v):
    """``eps * integral of h(u,v) - h(ubar,vbar) - (u-ubar) Theta_u - (v-vbar) Theta_v``."""
    _check_state(state, u, v)
    c = params.coupling
    ub, vb = state.ubar.values, state.vbar.values
    a, b = u.values, v.values
    integrand = (
        coupling_eval(c, a, b, "h")
        - coupling_eval(c, ub, vb, "h")
        - (a - ub) * state.theta_bar_u
        - (b - vb) * state.theta_bar_v
    )
    return float(params.eps * np.sum(integrand) * state.grid.dx)


def _edge_gradient(field, weight, dx):
    # centered differences inside the support, one-sided where a neighbour is empty
    grad = np.zeros_like(field)
    pos = weight > 0
    left = np.zeros_like(pos)
    right = np.zeros_like(pos)
    left[1:] = pos[:-1]
    right[:-1] = pos[1:]
    both = pos & left & right
    only_r = pos & right & ~left
    only_l = pos & left & ~right
    grad[1:-1][both[1:-1]] = ((field[2:] - field[:-2]) / (2 * dx))[both[1:-1]]
    idx = np.flatnonzero(only_r)
    grad[idx] = (field[idx + 1] - field[idx]) / dx
    idx = np.flatnonzero(only_l)
    grad[idx] = (field[idx] - field[idx - 1]) / dx
    return grad


def bracket_u(params, state, u):
    x = u.grid.centers
    return params.f.deriv1(u.values) + params.phi.value(x) + params.eps * state.theta_bar_u


def bracket_v(params, state, v):
    x = v.grid.centers
    return params.g.deriv1(v.values) + params.psi.value(x) + params.eps * state.theta_bar_v


def dissipation(params, state, u, v):
    _check_state(state, u, v)
    dx = state.grid.dx
    gu = _edge_gradient(bracket_u(params, state, u), u.values, dx)
    gv = _edge_gradient(bracket_v(params, state, v), v.values, dx)
    return float(np.sum(u.values * gu**2) * dx), float(np.sum(v.values * gv**2) * dx)


def functional_inequality_gap(params, state, u, v, k0):
    """``d - 2 (Lambda - K0 eps) l`` for each component."""
    l1, l2 = lyapunov(params, state, u, v)
    d1, d2 = dissipation(params, state, u, v)
    rate_u = params.phi.lambda_conv - k0 * params.eps
    rate_v = params.psi.lambda_conv - k0 * params.eps
    return d1 - 2 * rate_u * l1, d2 - 2 * rate_v * l2


def bregman_domination_check(params, state, u, v):
    """Largest ratio of the weighted squared theta-partial differences to the Lyapunov value.

    Returns ``(ratio, degenerate)``; ``degenerate`` flags the ``L ~ 0`` convention.
    """
    l1, l2 = lyapunov(params, state, u, v)
    total = l1 + l2
    if total <= ZERO_L:
        return 0.0, True
    c, f, g = params.coupling, params.f, params.g
    rho, eta = f.deriv1(u.values), g.deriv1(v.values)
    rb, eb = f.deriv1(state.ubar.values), g.deriv1(state.vbar.values)
    weight = u.values + v.values
    best = 0.0
    for which in ("u_rho", "u_eta", "v_rho", "v_eta"):
        diff = np.asarray(theta_eval(c, f, g, rho, eta, which)) - np.asarray(theta_eval(c, f, g, rb, eb, which))
        lhs = np.sum(weight * diff**2) * state.grid.dx
        best = max(best, lhs / total)
    return float(best), False


def csiszar_kullback_ratio(params, state, u, v):
    """``||u - ubar||_1**2 / l1`` and the v analogue (0 when the part vanishes)."""
    l1, l2 = lyapunov(params, state, u, v)
    dx = state.grid.dx
    n1 = np.sum(np.abs(u.values - state.ubar.values)) * dx
    n2 = np.sum(np.abs(v.values - state.vbar.values)) * dx
    r1 = n1**2 / l1 if l1 > ZERO_L else 0.0
    r2 = n2**2 / l2 if l2 > ZERO_L else 0.0
    return float(r1), float(r2)


def comparison_constants(params, state, pairs):
    """Smallest constants making ``L <= 2E + C``, ``E <= 2L + C`` and ``int Phi u <= L1 + C`` on ``pairs``."""
    c_le, c_el, c_phi = 0.0, 0.0, 0.0
    for u, v in pairs:
        e = energy(params, u, v)
        l1, l2 = lyapunov(params, state, u, v)
        l = l1 + l2
        phi_u = float(np.sum(params.phi.value(u.grid.centers) * u.values) * u.grid.dx)
        c_le = max(c_le, l - 2 * e)
        c_el = max(c_el, e - 2 * l)
        c_phi = max(c_phi, phi_u - l1)
    return {"l_by_e": c_le, "e_by_l": c_el, "phi_by_l1": c_phi}


def energy_report(params, state, u, v, k0=0.0):
    l1, l2 = lyapunov(params, state, u, v)
    d1, d2 = dissipation(params, state, u, v)
    rate_u = params.phi.lambda_conv - k0 * params.eps
    rate_v = params.psi.lambda_conv - k0 * params.eps
    return EnergyReport(
        e_eps=energy(params, u, v),
        entropy_sum=entropy(u) + entropy(v),
        l1=l1,
        l2=l2,
        l=l1 + l2,
        d1=d1,
        d2=d2,
        gap1=d1 - 2 * rate_u * l1,
        gap2=d2 - 2 * rate_v * l2,
    )
