"""Uniform 1D cell grids, piecewise-constant densities and their quantile
representation."""

import io
from dataclasses import dataclass

import numpy as np

from ._validation import DegenerateInputError, ParameterError, PreconditionError

MASS_TOL = 1e-9


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ParameterError("x_min must be < x_max")
        if int(self.n) != self.n or self.n < 16:
            raise ParameterError("grid needs n >= 16 cells")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.n

    @property
    def centers(self):
        return self.x_min + (np.arange(self.n) + 0.5) * self.dx

    @property
    def faces(self):
        return self.x_min + np.arange(self.n + 1) * self.dx

    def refine(self, factor=2):
        return Grid1D(self.x_min, self.x_max, self.n * factor)


class Density:
    """Nonnegative cell values of unit mass on a :class:`Grid1D`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.n,):
            raise ParameterError(f"expected {grid.n} values, got shape {values.shape}")
        if np.any(~np.isfinite(values)) or np.any(values < 0):
            raise ParameterError("density values must be finite and nonnegative")
        total = values.sum() * grid.dx
        if abs(total - 1.0) > MASS_TOL:
            raise ParameterError(f"density mass is {total!r}, expected 1")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @classmethod
    def normalized(cls, grid, values):
        values = np.asarray(values, dtype=float)
        total = values.sum() * grid.dx
        if not total >= 1e-12:
            raise DegenerateInputError("total mass below 1e-12")
        return cls(grid, values / total)

    def __repr__(self):
        return f"Density(n={self.grid.n}, window=[{self.grid.x_min}, {self.grid.x_max}])"


@dataclass(frozen=True)
class QuantileRep:
    """Positions ``X(s_j)`` at the midpoints ``s_j = (j + 1/2) / nq``."""

    positions: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ParameterError("need at least two quantile positions")
        if np.any(np.diff(x) < 0):
            raise ParameterError("quantile positions must be nondecreasing")
        object.__setattr__(self, "positions", x)

    @property
    def nq(self):
        return self.positions.size

    def levels(self):
        return (np.arange(self.nq) + 0.5) / self.nq


def density_from_fn(grid, fn, sub=8):
    """Cell averages of ``fn`` (``sub``-point midpoint rule per cell), renormalized."""
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    pts = grid.centers[:, None] + offs[None, :] * grid.dx
    vals = np.asarray(fn(pts), dtype=float)
    if np.any(vals < 0):
        raise ParameterError("fn must be nonnegative")
    avg = vals.mean(axis=1)
    total = avg.sum() * grid.dx
    if not total >= 1e-12:
        raise DegenerateInputError("function has (numerically) zero mass on the window")
    return Density(grid, avg / total)


def mass(d):
    return float(d.values.sum() * d.grid.dx)


def second_moment(d, center=0.0):
    return float(np.sum((d.grid.centers - center) ** 2 * d.values) * d.grid.dx)


def cdf_at_faces(d):
    c = np.concatenate([[0.0], np.cumsum(d.values) * d.grid.dx])
    return c / c[-1]


def to_quantiles(d, nq=None):
    """Invert the piecewise-linear CDF at the midpoint levels.

    Zero-density plateaus resolve to their left endpoint.
    """
    nq = d.grid.n if nq is None else int(nq)
    if nq < 2:
        raise PreconditionError("nq must be >= 2")
    c = cdf_at_faces(d)
    s = (np.arange(nq) + 0.5) / nq
    i = np.searchsorted(c, s, side="left")
    i = np.clip(i, 1, d.grid.n)
    lo, hi = c[i - 1], c[i]
    frac = (s - lo) / (hi - lo)
    x = d.grid.faces[i - 1] + frac * d.grid.dx
    return QuantileRep(np.maximum.accumulate(x))


def breakpoints(positions):
    """Nodes of the piecewise-linear quantile reconstruction.

    The positions themselves plus one node beyond each end, extrapolated by
    half of the outermost gap. Consecutive nodes bound cells whose masses are
    given by :func:`cell_masses`.
    """
    x = np.asarray(positions, dtype=float)
    b = np.empty(x.size + 2)
    b[1:-1] = x
    b[0] = x[0] - 0.5 * (x[1] - x[0])
    b[-1] = x[-1] + 0.5 * (x[-1] - x[-2])
    return b


def cell_masses(nq):
    """``1/(2 nq)`` for the two end cells, ``1/nq`` in between."""
    m = np.full(nq + 1, 1.0 / nq)
    m[0] = m[-1] = 0.5 / nq
    return m


def reconstruction_cdf(positions, x):
    """CDF of the piecewise-constant density carried by ``positions``."""
    b = breakpoints(positions)
    nq = b.size - 2
    levels = np.concatenate([[0.0], (np.arange(nq) + 0.5) / nq, [1.0]])
    return np.interp(x, b, levels, left=0.0, right=1.0)


def from_quantiles(q, grid):
    """Deposit the piecewise-constant reconstruction onto ``grid`` by exact cell overlaps.

    Mass outside the window is assigned to the boundary cells.
    """
    cf = reconstruction_cdf(q.positions, grid.faces)
    cf[0], cf[-1] = 0.0, 1.0
    vals = np.maximum(np.diff(cf), 0.0) / grid.dx
    return Density.normalized(grid, vals)


def density_to_csv(d):
    buf = io.StringIO()
    buf.write("x,value\n")
    for x, v in zip(d.grid.centers, d.values):
        buf.write(f"{x:.17g},{v:.17g}\n")
    return buf.getvalue()


def density_from_csv(text):
    rows = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
    x = rows[:, 0]
    dx = x[1] - x[0]
    grid = Grid1D(x[0] - dx / 2, x[-1] + dx / 2, len(x))
    return Density.normalized(grid, rows[:, 1])
