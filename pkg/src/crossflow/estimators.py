"""scikit-learn style wrappers around the stationary solver and the JKO flow.

Densities enter and leave as arrays of shape ``(n_cells, 2)``: column 0 is
u, column 1 is v, sampled at the grid cell centres.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import PreconditionError
from .evolution import JkoConfig, evolve
from .grid import Density, Grid1D, from_quantiles
from .model import power_model
from .stationary import solve_stationary


class _ModelMixin:
    def _params(self):
        return power_model(
            m=self.m,
            n=self.n,
            p=self.p,
            q=self.q,
            lam=self.lam,
            eps=self.eps,
            lambda_conv=self.lambda_conv,
        )

    def _grid(self):
        return Grid1D(self.x_min, self.x_max, self.n_cells)

    def _pair(self, X):
        X = check_array(X, ensure_min_features=2)
        if X.shape != (self.n_cells, 2):
            raise PreconditionError(f"expected shape ({self.n_cells}, 2), got {X.shape}")
        if np.any(X < 0):
            raise PreconditionError("densities must be nonnegative")
        g = self._grid()
        return Density.normalized(g, X[:, 0]), Density.normalized(g, X[:, 1])


class StationarySolver(_ModelMixin, BaseEstimator):
    """Solve for the stationary pair; ``predict`` samples it at arbitrary points."""

    def __init__(self, m=2, n=2, p=4, q=4, lam=1.0, eps=0.0, lambda_conv=1.0, x_min=-3.0, x_max=3.0, n_cells=512):
        self.m = m
        self.n = n
        self.p = p
        self.q = q
        self.lam = lam
        self.eps = eps
        self.lambda_conv = lambda_conv
        self.x_min = x_min
        self.x_max = x_max
        self.n_cells = n_cells

    def fit(self, X=None, y=None):
        self.state_ = solve_stationary(self._params(), self._grid())
        self.levels_ = (self.state_.u_eps, self.state_.v_eps)
        return self

    def predict(self, x):
        check_is_fitted(self, "state_")
        x = np.asarray(x, dtype=float).ravel()
        c = self.state_.grid.centers
        u = np.interp(x, c, self.state_.ubar.values, left=0.0, right=0.0)
        v = np.interp(x, c, self.state_.vbar.values, left=0.0, right=0.0)
        return np.column_stack([u, v])


class JKOFlow(_ModelMixin, TransformerMixin, BaseEstimator):
    """Run the minimizing-movement flow from the pair given to ``fit``.

    ``transform`` maps an initial pair to the pair at ``t_end``.
    """

    def __init__(
        self,
        m=2,
        n=2,
        p=4,
        q=4,
        lam=1.0,
        eps=0.0,
        lambda_conv=1.0,
        x_min=-3.0,
        x_max=3.0,
        n_cells=512,
        tau=1e-2,
        t_end=1.0,
        nq=1024,
        inner_tol=None,
    ):
        self.m = m
        self.n = n
        self.p = p
        self.q = q
        self.lam = lam
        self.eps = eps
        self.lambda_conv = lambda_conv
        self.x_min = x_min
        self.x_max = x_max
        self.n_cells = n_cells
        self.tau = tau
        self.t_end = t_end
        self.nq = nq
        self.inner_tol = inner_tol

    def _run(self, X):
        params = self._params()
        cfg = JkoConfig(self.tau, self.t_end, self.nq, self.inner_tol)
        return evolve(params, self._pair(X), cfg, keep_snapshots=False)

    def fit(self, X, y=None):
        self.trajectory_ = self._run(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "trajectory_")
        traj = self._run(X)
        g = self._grid()
        return np.column_stack([from_quantiles(q, g).values for q in traj.final])
