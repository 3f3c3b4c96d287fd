import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from crossflow._validation import PreconditionError
from crossflow.estimators import JKOFlow, StationarySolver

from conftest import U_DECOUPLED


def test_stationary_solver_predict():
    est = StationarySolver(n_cells=1024).fit()
    x = np.array([-2.0, 0.0, 0.5])
    out = est.predict(x)
    assert out.shape == (3, 2)
    np.testing.assert_allclose(out[:, 0], np.maximum(U_DECOUPLED - x**2 / 2, 0), atol=1e-4)
    assert est.levels_[0] == pytest.approx(U_DECOUPLED, rel=1e-5)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        StationarySolver().predict([0.0])
    with pytest.raises(NotFittedError):
        JKOFlow().transform(np.ones((512, 2)))


def test_params_round_trip():
    est = JKOFlow(eps=0.02, nq=256)
    assert clone(est).get_params()["eps"] == 0.02
    est.set_params(tau=0.05)
    assert est.tau == 0.05


def test_jko_flow_transform():
    x = np.linspace(-3, 3, 129)[:-1] + 3 / 128
    X = np.column_stack([np.exp(-((x - 0.4) ** 2)), np.exp(-((x + 0.3) ** 2))])
    est = JKOFlow(n_cells=128, nq=256, tau=0.05, t_end=0.2).fit(X)
    out = est.transform(X)
    assert out.shape == (128, 2)
    assert np.sum(out, axis=0) * 6 / 128 == pytest.approx([1.0, 1.0])
    assert len(est.trajectory_.rows) == 5
    with pytest.raises(PreconditionError):
        est.transform(X[:64])
    with pytest.raises(PreconditionError):
        est.transform(-X)
