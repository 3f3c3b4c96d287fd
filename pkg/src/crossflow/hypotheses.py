"""Sampled certification of the structural hypotheses and estimation of the
constants that bound the admissible coupling strength."""

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from ._validation import PreconditionError, ValidationError, check_in
from .model import THETA_PARTS, density_cap_for, eps_star, theta_eval


@dataclass
class HypothesisReport:
    mccann_ok: bool
    D: float
    W: float
    A: float
    k_degenerate_up_to: int
    k_bounded_up_to: int
    eps_star: float
    k0: float
    eps_bar: float
    violations: list = field(default_factory=list)

    def as_dict(self):
        return asdict(self)

    def to_json(self, **extra):
        doc = self.as_dict()
        doc.update(extra)
        return json.dumps(doc, sort_keys=True, indent=2)


def check_mccann(spec, n=10_000):
    """Sampled check of ``r F'(r) <= F(r) + r**2 F''(r)`` on ``[1e-8, 1e4]``.

    Returns ``(ok, witness)``; ``witness`` is the first failing ``r`` or None.
    For the power family the slack is ``(m-1)**2 / m * r**m``, never negative.
    """
    r = np.logspace(-8, 4, n)
    lhs = r * spec.deriv1(r)
    rhs = spec.value(r) + r**2 * spec.deriv2(r)
    bad = lhs > rhs * (1 + 1e-12)
    symbolic_ok = (spec.m - 1) ** 2 / spec.m >= 0
    if np.any(bad):
        return False, float(r[np.argmax(bad)])
    return bool(symbolic_ok), None


def check_doubling(spec, n=10_000, seed=0):
    """Doubling constant ``2**(m-1)`` with a sampled certificate.

    Returns ``(D, ok)`` where ``ok`` covers both the doubling and the
    derived bound ``r F'(r) <= D (1 + 2 F(r))``.
    """
    D = 2.0 ** (spec.m - 1)
    rng = np.random.default_rng(seed)
    r = 10 ** rng.uniform(-6, 3, n)
    s = 10 ** rng.uniform(-6, 3, n)
    dbl = spec.value(r + s) <= D * (1 + spec.value(r) + spec.value(s)) * (1 + 1e-12)
    tri = r * spec.deriv1(r) <= D * (1 + 2 * spec.value(r)) * (1 + 1e-12)
    return D, bool(np.all(dbl) and np.all(tri))


def sampling_cap(params):
    """Density cap used to size sampling rectangles."""
    try:
        star = eps_star(params)
    except ValidationError:
        star = params.eps
    return density_cap_for(params, star)


def _log_box(params, lo, n):
    cap = sampling_cap(params)
    s = np.logspace(np.log10(lo), np.log10(3 * cap), n)
    return np.meshgrid(s, s, indexing="ij")


def _swap_level(params, lo, n):
    c, f, g = params.coupling, params.f, params.g
    uu, vv = _log_box(params, lo, n)
    rho, eta = f.deriv1(uu), g.deriv1(vv)
    a = np.sqrt(uu / vv) * np.abs(theta_eval(c, f, g, rho, eta, "u_eta"))
    b = np.sqrt(vv / uu) * np.abs(theta_eval(c, f, g, rho, eta, "v_rho"))
    both = np.maximum(a, b)
    i = int(np.argmax(both))
    return float(both.flat[i]), (float(uu.flat[i]), float(vv.flat[i]))


def check_swap(params, n=200, strict=False):
    """Sampled swap constant ``W``.

    Two levels are compared: ``n`` points per axis from ``1e-6`` and ``2n``
    points from ``1e-9``. Growth above 10% marks divergence at the boundary.
    Returns ``(W, ok, corner)`` with the maximizing sample of the finer level.
    """
    if params.coupling.zero:
        return 0.0, True, None
    w1, _ = _swap_level(params, 1e-6, n)
    w2, corner = _swap_level(params, 1e-9, 2 * n)
    ok = w2 <= 1.1 * w1 + 1e-300
    if not ok and strict:
        raise ValidationError(f"swap bound diverges near {corner}", witness=corner)
    return max(w1, w2), bool(ok), corner


def _ratio(a, b):
    return Fraction(str(float(a))) / Fraction(str(float(b)))


def k_flags(params, k):
    """Exact-rational exponent conditions ``(bounded, degenerate)`` at order ``k``."""
    f, g, c = params.f, params.g, params.coupling
    if c.zero:
        return True, True
    base = c.p >= f.m and c.q >= g.m
    mu = _ratio(c.p - 1, f.m - 1)
    nu = _ratio(c.q - 1, g.m - 1)
    bounded = base and mu >= k and nu >= k
    degenerate = base and mu > k and nu > k
    return bool(bounded), bool(degenerate)


def bound_constant(params, n=200):
    """``max omega / min(1, rho, eta)`` over the six theta maps on a log sample."""
    if params.coupling.zero:
        return 0.0
    c, f, g = params.coupling, params.f, params.g
    uu, vv = _log_box(params, 1e-6, n)
    rho, eta = f.deriv1(uu), g.deriv1(vv)
    floor = np.minimum(1.0, np.minimum(rho, eta))
    best = 0.0
    for which in THETA_PARTS:
        om = np.abs(theta_eval(c, f, g, rho, eta, which))
        best = max(best, float(np.max(om / floor)))
    return best


def check_k_conditions(params, k, n=200):
    check_in(k, {1, 2, 3}, "k")
    bounded, degenerate = k_flags(params, k)
    return bounded, degenerate, bound_constant(params, n)


def estimate_k0(state):
    """Semiconvexity constant from centred second differences of the coupling fields."""
    g = state.grid
    if g.n < 16:
        raise PreconditionError("grid too coarse for second differences")
    worst = 0.0
    for fld in (state.theta_bar_u, state.theta_bar_v):
        d2 = (fld[2:] - 2 * fld[1:-1] + fld[:-2]) / g.dx**2
        worst = min(worst, float(np.min(d2)))
    return max(0.0, -worst)


def compute_eps_bar(report, lambda_conv):
    """``min(eps_star, 1/sqrt(12 (A**2 + W)), Lambda / (2 K0))``."""
    s = report.A**2 + report.W
    t1 = 1.0 / np.sqrt(12 * s) if s > 0 else np.inf
    t2 = lambda_conv / (2 * report.k0) if report.k0 > 0 else np.inf
    return float(min(report.eps_star, t1, t2))


def validate(params, k=2, state=None, n=200):
    """Run every check and collect violations into a report."""
    violations = []
    mcc = [check_mccann(s) for s in (params.f, params.g)]
    mccann_ok = all(ok for ok, _ in mcc)
    for (ok, wit), name in zip(mcc, ("F", "G")):
        if not ok:
            violations.append(("mccann", {"component": name, "r": wit}))
    dbl = [check_doubling(s) for s in (params.f, params.g)]
    D = max(d for d, _ in dbl)
    if not all(ok for _, ok in dbl):
        violations.append(("doubling", {"D": D}))
    try:
        star = eps_star(params)
    except ValidationError as exc:
        star = 0.0
        violations.append(("convexity", {"message": str(exc), "witness": exc.witness}))
    W, swap_ok, corner = check_swap(params, n)
    if not swap_ok:
        violations.append(("swap", {"corner": corner}))
    bounded, degenerate, A = check_k_conditions(params, k, n)
    if not degenerate:
        violations.append(("k-degeneracy", {"k": k, "p": params.coupling.p, "q": params.coupling.q}))
    if not bounded:
        violations.append(("k-boundedness", {"k": k}))
    deg_up, bnd_up = 0, 0
    for kk in (1, 2, 3):
        b, d = k_flags(params, kk)
        bnd_up = kk if b and bnd_up == kk - 1 else bnd_up
        deg_up = kk if d and deg_up == kk - 1 else deg_up
    k0 = estimate_k0(state) if state is not None else 0.0
    report = HypothesisReport(
        mccann_ok=mccann_ok,
        D=D,
        W=W,
        A=A,
        k_degenerate_up_to=deg_up,
        k_bounded_up_to=bnd_up,
        eps_star=star,
        k0=k0,
        eps_bar=0.0,
        violations=violations,
    )
    report.eps_bar = compute_eps_bar(report, params.lambda_conv)
    if params.eps > report.eps_bar:
        violations.append(("eps-range", {"eps": params.eps, "eps_bar": report.eps_bar}))
    return report
