import numpy as np
import pytest

from nldisp import BoxDomain, build_grid

UNIT = BoxDomain((0.0,), (1.0,))


@pytest.fixture
def unit_domain():
    return UNIT


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def neumann_grid(n=128):
    return build_grid(UNIT, (n,), "neumann")


def dirichlet_grid(n=128):
    return build_grid(UNIT, (n,), "dirichlet")


def periodic_grid(n=128):
    return build_grid(UNIT, (n,), "periodic")
