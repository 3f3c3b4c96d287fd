"""Analytic ingredients: power nonlinearities, the exponential coupling,
confining potentials and the parameter bundle.

Every function accepts scalars or numpy arrays and evaluates closed forms.
Values on the coordinate axes are fixed by the exponent pattern instead of
being computed from ``0 ** negative`` intermediates.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._validation import (
    DomainError,
    ParameterError,
    ValidationError,
    as_nonneg,
    check_in,
    check_positive,
    scalar_or_array,
)

COUPLING_PARTS = ("h", "du", "dv", "duu", "duv", "dvv")
THETA_PARTS = ("u", "v", "u_rho", "u_eta", "v_rho", "v_eta")

# eps_star search grid, descending; the top value is returned for zero coupling
EPS_SEARCH = np.logspace(1, -8, 181)
EPS_FLOOR = 1e-8


def _spow(x, a):
    # x**a for x >= 0 with the boundary limit 0**a = 0 (a > 0), 1 (a == 0), inf (a < 0)
    x = np.asarray(x, dtype=float)
    if a == 0:
        return np.ones_like(x)
    out = np.zeros_like(x) if a > 0 else np.full_like(x, np.inf)
    pos = x > 0
    out[pos] = x[pos] ** a
    return out


def _term(c, x, a):
    if c == 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    return c * _spow(x, a)


@dataclass(frozen=True)
class NonlinearitySpec:
    """Internal energy density ``F(r) = r**m / m``."""

    m: float

    def __post_init__(self):
        check_positive(self.m, "m")

    def value(self, r):
        return evaluate_nonlinearity(self, r, 0)

    def deriv1(self, r):
        return evaluate_nonlinearity(self, r, 1)

    def deriv2(self, r):
        return evaluate_nonlinearity(self, r, 2)

    def inverse_deriv1(self, rho):
        return inverse_deriv1(self, rho)

    def pressure(self, r):
        """``r F'(r) - F(r)``."""
        r = as_nonneg(r, "r")
        return scalar_or_array((self.m - 1.0) / self.m * _spow(r, self.m))


@dataclass(frozen=True)
class CouplingSpec:
    """Coupling ``h(u, v) = u**p v**q exp(-lam (u + v))``.

    ``zero=True`` switches the coupling off entirely (h identically 0).
    """

    p: float
    q: float
    lam: float
    zero: bool = False

    def __post_init__(self):
        check_positive(self.p, "p")
        check_positive(self.q, "q")
        check_positive(self.lam, "lambda")


@dataclass(frozen=True)
class PotentialSpec:
    """Confining potential with minimum 0 at ``center``.

    quadratic: ``lambda_conv/2 (x-c)**2``
    quartic:   ``c4 (x-c)**4 + lambda_conv/2 (x-c)**2``
    ``big_m`` is the upper bound on the second derivative.
    """

    lambda_conv: float
    big_m: float = None
    center: float = 0.0
    form: str = "quadratic"
    c4: float = 0.0

    def __post_init__(self):
        check_positive(self.lambda_conv, "lambda_conv")
        check_in(self.form, {"quadratic", "quartic"}, "form")
        if self.big_m is None:
            object.__setattr__(self, "big_m", float(self.lambda_conv))
        if self.big_m < self.lambda_conv:
            raise ParameterError("big_m must be >= lambda_conv")
        if self.c4 < 0:
            raise ParameterError("c4 must be nonnegative")
        if self.form == "quadratic" and self.c4 != 0:
            raise ParameterError("c4 is only used by the quartic form")

    def value(self, x):
        y = np.asarray(x, dtype=float) - self.center
        return scalar_or_array(0.5 * self.lambda_conv * y**2 + self.c4 * y**4)

    def deriv1(self, x):
        y = np.asarray(x, dtype=float) - self.center
        return scalar_or_array(self.lambda_conv * y + 4 * self.c4 * y**3)

    def deriv2(self, x):
        y = np.asarray(x, dtype=float) - self.center
        return scalar_or_array(self.lambda_conv + 12 * self.c4 * y**2 + 0 * y)

    def cell_average(self, a, b):
        """Mean of the potential over ``[a, b]`` (exact; stable for a ~ b)."""
        A = np.asarray(a, dtype=float) - self.center
        B = np.asarray(b, dtype=float) - self.center
        out = self.lambda_conv / 6 * (A * A + A * B + B * B)
        if self.c4:
            out = out + self.c4 / 5 * (A**4 + A**3 * B + A**2 * B**2 + A * B**3 + B**4)
        return out

    def cell_average_grad(self, a, b):
        """Partial derivatives of :meth:`cell_average` in ``a`` and ``b``."""
        A = np.asarray(a, dtype=float) - self.center
        B = np.asarray(b, dtype=float) - self.center
        da = self.lambda_conv / 6 * (2 * A + B)
        db = self.lambda_conv / 6 * (A + 2 * B)
        if self.c4:
            da = da + self.c4 / 5 * (4 * A**3 + 3 * A**2 * B + 2 * A * B**2 + B**3)
            db = db + self.c4 / 5 * (A**3 + 2 * A**2 * B + 3 * A * B**2 + 4 * B**3)
        return da, db

    def sublevel(self, level):
        """Interval ``{x : value(x) < level}`` as ``(lo, hi)``."""
        if level <= 0:
            return (self.center, self.center)
        if self.c4 == 0:
            r = np.sqrt(2 * level / self.lambda_conv)
        else:
            # positive root of c4 s**2 + lam/2 s = level, s = y**2
            a, b = self.c4, 0.5 * self.lambda_conv
            s = 2 * level / (b + np.sqrt(b * b + 4 * a * level))
            r = np.sqrt(s)
        return (self.center - r, self.center + r)

    def check_bounds(self, x):
        """Hessian sandwich and parabola sandwich at the points ``x``."""
        x = np.asarray(x, dtype=float)
        d2 = np.asarray(self.deriv2(x))
        phi = np.asarray(self.value(x))
        y2 = (x - self.center) ** 2
        tol = 1e-12 * (1 + np.abs(phi))
        hess_ok = bool(np.all(d2 >= self.lambda_conv - 1e-12) and np.all(d2 <= self.big_m + 1e-12))
        sandwich_ok = bool(
            np.all(0.5 * self.lambda_conv * y2 <= phi + tol) and np.all(phi <= 0.5 * self.big_m * y2 + tol)
        )
        return hess_ok and sandwich_ok


@dataclass(frozen=True)
class ModelParams:
    f: NonlinearitySpec
    g: NonlinearitySpec
    coupling: CouplingSpec
    phi: PotentialSpec
    psi: PotentialSpec
    eps: float = 0.0
    dim: int = 1

    def __post_init__(self):
        if not np.isfinite(self.eps) or self.eps < 0:
            raise ParameterError("eps must be >= 0")
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")

    @classmethod
    def validated(cls, *args, **kwargs):
        """Construct and require ``eps <= eps_star``."""
        params = cls(*args, **kwargs)
        star = eps_star(params)
        if params.eps > star:
            raise ValidationError(f"eps={params.eps} exceeds eps_star={star:.4g}")
        return params

    def with_eps(self, eps):
        return ModelParams(self.f, self.g, self.coupling, self.phi, self.psi, eps, self.dim)

    @property
    def big_m(self):
        return max(self.phi.big_m, self.psi.big_m)

    @property
    def lambda_conv(self):
        return min(self.phi.lambda_conv, self.psi.lambda_conv)


def power_model(m=2, n=2, p=4, q=4, lam=1.0, eps=0.0, lambda_conv=1.0, center_u=0.0, center_v=0.0, zero=False):
    """Convenience constructor for the power family with quadratic potentials."""
    return ModelParams(
        NonlinearitySpec(m),
        NonlinearitySpec(n),
        CouplingSpec(p, q, lam, zero=zero),
        PotentialSpec(lambda_conv, center=center_u),
        PotentialSpec(lambda_conv, center=center_v),
        eps,
    )


def evaluate_nonlinearity(spec, r, order):
    r = as_nonneg(r, "r")
    m = spec.m
    if order == 0:
        out = _spow(r, m) / m
    elif order == 1:
        out = _spow(r, m - 1)
    elif order == 2:
        out = _term(m - 1, r, m - 2)
    else:
        raise ParameterError("order must be 0, 1 or 2")
    return scalar_or_array(out)


def inverse_deriv1(spec, rho):
    rho = as_nonneg(rho, "rho")
    return scalar_or_array(_spow(rho, 1.0 / (spec.m - 1)))


def _uv_parts(spec, u, v, u_shift=0.0, v_shift=0.0):
    # polynomial prefactors of h and its partials, exponents optionally shifted
    p, q, lam = spec.p, spec.q, spec.lam
    s = u_shift
    t = v_shift
    U0 = _spow(u, p - s)
    U1 = _term(p, u, p - 1 - s) - lam * _spow(u, p - s)
    U2 = _term(p * (p - 1), u, p - 2 - s) - _term(2 * lam * p, u, p - 1 - s) + lam**2 * _spow(u, p - s)
    V0 = _spow(v, q - t)
    V1 = _term(q, v, q - 1 - t) - lam * _spow(v, q - t)
    V2 = _term(q * (q - 1), v, q - 2 - t) - _term(2 * lam * q, v, q - 1 - t) + lam**2 * _spow(v, q - t)
    return (U0, U1, U2), (V0, V1, V2)


def coupling_eval(spec, u, v, which):
    check_in(which, set(COUPLING_PARTS), "which")
    u = as_nonneg(u, "u")
    v = as_nonneg(v, "v")
    u, v = np.broadcast_arrays(u, v)
    if spec.zero:
        return scalar_or_array(np.zeros(u.shape))
    (U0, U1, U2), (V0, V1, V2) = _uv_parts(spec, u, v)
    e = np.exp(-spec.lam * (u + v))
    prod = {
        "h": U0 * V0,
        "du": U1 * V0,
        "dv": U0 * V1,
        "duu": U2 * V0,
        "duv": U1 * V1,
        "dvv": U0 * V2,
    }[which]
    out = np.where((u > 0) & (v > 0), prod * e, 0.0)
    if which in ("du", "duu"):
        # u = 0 boundary keeps the u-derivative limit when the exponent allows it
        edge = (u == 0) & (v > 0)
        out = np.where(edge, np.nan_to_num(prod * e, nan=0.0, posinf=np.inf), out)
    if which in ("dv", "dvv"):
        edge = (v == 0) & (u > 0)
        out = np.where(edge, np.nan_to_num(prod * e, nan=0.0, posinf=np.inf), out)
    return scalar_or_array(out)


def theta_eval(spec, f, g, rho, eta, which):
    """Coupling partials in pressure variables ``rho = F'(u)``, ``eta = G'(v)``."""
    check_in(which, set(THETA_PARTS), "which")
    rho = as_nonneg(rho, "rho")
    eta = as_nonneg(eta, "eta")
    rho, eta = np.broadcast_arrays(rho, eta)
    if spec.zero:
        return scalar_or_array(np.zeros(rho.shape))
    u = np.asarray(inverse_deriv1(f, rho), dtype=float)
    v = np.asarray(inverse_deriv1(g, eta), dtype=float)
    e = np.exp(-spec.lam * (u + v))
    # derivative in rho divides by F''(u) = (m-1) u**(m-2): shift the u exponents
    su = f.m - 2
    sv = g.m - 2
    if which == "u":
        (_, U1, _), (V0, _, _) = _uv_parts(spec, u, v)
        prod = U1 * V0
    elif which == "v":
        (U0, _, _), (_, V1, _) = _uv_parts(spec, u, v)
        prod = U0 * V1
    elif which == "u_rho":
        (_, _, U2), (V0, _, _) = _uv_parts(spec, u, v, u_shift=su)
        prod = U2 * V0 / (f.m - 1)
    elif which == "u_eta":
        (_, U1, _), (_, V1, _) = _uv_parts(spec, u, v, v_shift=sv)
        prod = U1 * V1 / (g.m - 1)
    elif which == "v_rho":
        (_, U1, _), (_, V1, _) = _uv_parts(spec, u, v, u_shift=su)
        prod = U1 * V1 / (f.m - 1)
    else:
        (U0, _, _), (_, _, V2) = _uv_parts(spec, u, v, v_shift=sv)
        prod = U0 * V2 / (g.m - 1)
    out = np.where((u > 0) & (v > 0), prod * e, 0.0)
    return scalar_or_array(out)


@lru_cache(maxsize=64)
def coupling_sup(spec, which, upper=2.0, n=401):
    """Sampled supremum of a coupling partial over ``[0, upper]**2``."""
    if spec.zero:
        return 0.0
    s = np.linspace(0.0, upper, n)
    uu, vv = np.meshgrid(s, s, indexing="ij")
    return float(np.max(coupling_eval(spec, uu, vv, which)))


def density_cap_for(params, eps_value):
    """Smallest cap ``>= 2`` with ``F'(cap)/2 >= F'(2) + d M + eps * sup dh``, and the G analogue."""
    caps = []
    for spec, which in ((params.f, "du"), (params.g, "dv")):
        sup = max(coupling_sup(params.coupling, which), 0.0)
        rhs = spec.deriv1(2.0) + params.dim * params.big_m + eps_value * sup

        def ok(c, spec=spec, rhs=rhs):
            return 0.5 * spec.deriv1(c) >= rhs

        lo, hi = 2.0, 4.0
        if ok(lo):
            caps.append(lo)
            continue
        while not ok(hi):
            lo, hi = hi, 2 * hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-13 * hi:
                break
        caps.append(hi)
    return max(caps)


def _convexity_margin(params, eps_value, uu, vv):
    # smallest Hessian eigenvalue of F + G + 2 eps h and the bound slack F + G - 2 eps |h|
    c = params.coupling
    a = np.asarray(params.f.deriv2(uu)) + 2 * eps_value * coupling_eval(c, uu, vv, "duu")
    d = np.asarray(params.g.deriv2(vv)) + 2 * eps_value * coupling_eval(c, uu, vv, "dvv")
    b = 2 * eps_value * np.asarray(coupling_eval(c, uu, vv, "duv"))
    lam_min = 0.5 * (a + d) - np.sqrt(0.25 * (a - d) ** 2 + b * b)
    slack = params.f.value(uu) + params.g.value(vv) - 2 * eps_value * np.abs(coupling_eval(c, uu, vv, "h"))
    return lam_min, slack


def _check_family(params):
    f, g, c = params.f, params.g, params.coupling
    if f.m < 2 or g.m < 2:
        raise ValidationError("exponents m, n must be >= 2", witness={"m": f.m, "n": g.m})
    if not c.zero and (c.p < f.m or c.q < g.m):
        raise ValidationError(
            "coupling exponents below the convexity threshold p >= m, q >= n",
            witness={"p": c.p, "m": f.m, "q": c.q, "n": g.m},
        )


def eps_star(params, n_samples=200):
    """Largest coupling strength on the search grid keeping the energy density convex.

    Samples a ``n_samples**2`` log grid on ``[1e-6, 3 cap]**2`` where ``cap`` is
    the density cap evaluated at the candidate strength.
    """
    _check_family(params)
    # the result does not depend on eps itself
    return _eps_star_cached(params.with_eps(0.0), n_samples)


@lru_cache(maxsize=32)
def _eps_star_cached(params, n_samples):
    if params.coupling.zero:
        return float(EPS_SEARCH[0])
    witness = None
    for cand in EPS_SEARCH:
        cap = density_cap_for(params, cand)
        s = np.logspace(-6, np.log10(3 * cap), n_samples)
        uu, vv = np.meshgrid(s, s, indexing="ij")
        lam_min, slack = _convexity_margin(params, cand, uu, vv)
        scale = 1e-12 * (1 + np.abs(params.f.deriv2(uu)) + np.abs(params.g.deriv2(vv)))
        bad = (lam_min < -scale) | (slack < -1e-12 * (1 + params.f.value(uu) + params.g.value(vv)))
        if not np.any(bad):
            return float(cand)
        i = np.argmax(bad)
        witness = (float(uu.flat[i]), float(vv.flat[i]))
    raise ValidationError(f"no admissible eps_star above {EPS_FLOOR}", witness=witness)
