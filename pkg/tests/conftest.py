"""Shared oracles and fixtures."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from devarg.construct import default_bracket
from devarg.registry import builtin_problem


def closed_form_reflection(t):
    """x(t) = int_0^t dr / (cos r - 3), by adaptive quadrature at 1e-10 and better."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.array([
        quad(lambda r: 1.0 / (math.cos(r) - 3.0), 0.0, ti, epsabs=1e-13, epsrel=1e-13)[0]
        for ti in t
    ])


def closed_form_reflection_analytic(t):
    """Antiderivative of 1/(cos r - 3) for |r| < pi, an independent check on the quadrature."""
    t = np.asarray(t, dtype=float)
    return -np.arctan(math.sqrt(2.0) * np.tan(t / 2.0)) / math.sqrt(2.0)


@pytest.fixture(scope="session")
def ex28():
    return builtin_problem("example2_8")


@pytest.fixture(scope="session")
def ex28_bracket_2000(ex28):
    return default_bracket(ex28, 2000)


@pytest.fixture(scope="session")
def ex28_oracle_2000(ex28_bracket_2000):
    return closed_form_reflection(ex28_bracket_2000.grid.plus_nodes)


@pytest.fixture(scope="session")
def ex26():
    return builtin_problem("example2_6")


@pytest.fixture(scope="session")
def ex24():
    return builtin_problem("example2_4")
