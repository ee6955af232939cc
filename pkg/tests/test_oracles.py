"""The reference solutions agree with each other before they are used to judge code."""

import numpy as np

from conftest import closed_form_reflection, closed_form_reflection_analytic


def test_reflection_quadrature_matches_antiderivative():
    t = np.linspace(0.0, 1.0, 101)
    assert np.max(np.abs(closed_form_reflection(t) - closed_form_reflection_analytic(t))) < 1e-12


def test_reflection_closed_form_solves_the_equation():
    # x'(t) = -t / x(-t) with x(-t) = k(-t) = -t cos t + 3t on the history
    t = np.linspace(0.01, 1.0, 50)
    h = 1e-6
    deriv = (closed_form_reflection_analytic(t + h) - closed_form_reflection_analytic(t - h)) / (2 * h)
    k_reflected = -t * np.cos(t) + 3 * t
    assert np.max(np.abs(deriv - (-t / k_reflected))) < 1e-8


def test_pure_delay_closed_form():
    # x' = -x(t-1) with x = -t on [-1, 0] gives x' = t - 1 on [0, 1]
    t = np.linspace(0, 1, 11)
    x = t**2 / 2 - t
    assert x[-1] == -0.5
    np.testing.assert_allclose(np.gradient(x, t, edge_order=2), t - 1, atol=1e-12)
