import numpy as np
import pytest

from crossflow.grid import Grid1D
from crossflow.model import power_model
from crossflow.stationary import solve_stationary

# closed-form level of the decoupled quadratic problem: (4 sqrt 2 / 3) U**1.5 = 1
U_DECOUPLED = (3 / (4 * np.sqrt(2))) ** (2 / 3)


@pytest.fixture(scope="session")
def decoupled():
    return power_model(p=4, q=4, eps=0.0)


@pytest.fixture(scope="session")
def coupled():
    return power_model(p=4, q=4, eps=0.05)


@pytest.fixture(scope="session")
def grid512():
    return Grid1D(-3.0, 3.0, 512)


@pytest.fixture(scope="session")
def grid256():
    return Grid1D(-3.0, 3.0, 256)


@pytest.fixture(scope="session")
def state0(decoupled, grid512):
    return solve_stationary(decoupled, grid512)


@pytest.fixture(scope="session")
def state_c(coupled, grid512):
    return solve_stationary(coupled, grid512)


@pytest.fixture(scope="session")
def state0_256(decoupled, grid256):
    return solve_stationary(decoupled, grid256)
