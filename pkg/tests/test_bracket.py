import math

import numpy as np
import pytest

from devarg.bracket import (
    BracketPair,
    deviation_envelope,
    lambda_bounds,
    make_bracket,
    truncate,
    value_envelope,
    verify_classical,
    verify_new,
)
from devarg.construct import default_bracket
from devarg.errors import BracketError, ConfigError
from devarg.expr import ExprFunction
from devarg.gridfun import GridFun, make_grid
from devarg.problem import DeviationSpec, FunctionalSpec, ProblemSpec, RhsSpec, parse_functional


def _unit_bracket(grid):
    return make_bracket(GridFun.constant(grid, 0.0), GridFun.constant(grid, 1.0),
                        FunctionalSpec("constant", (0.0,)))


def test_truncate_examples():
    b = _unit_bracket(make_grid(0, 1, 1, 4, 4))
    assert truncate(0.3, -0.5, b) == 0.0
    assert truncate(0.3, 0.5, b) == 0.5
    assert truncate(0.3, 7.0, b) == 1.0
    np.testing.assert_array_equal(truncate(np.array([0.1, 0.2]), np.array([-1.0, 2.0]), b), [0, 1])


def test_bracket_order_is_strict():
    grid = make_grid(0, 1, 1, 4, 4)
    with pytest.raises(BracketError):
        BracketPair(GridFun.constant(grid, 1.0), GridFun.constant(grid, 1.0 - 1e-15))
    BracketPair(GridFun.constant(grid, 1.0), GridFun.constant(grid, 1.0))


def test_bracket_with_alpha_shifted_above_beta_is_rejected(ex26):
    b = default_bracket(ex26, 100)
    with pytest.raises(BracketError):
        make_bracket(b.alpha.with_values(b.alpha.values + 10), b.beta, ex26.boundary)


def test_deviation_envelope_examples(ex26):
    t = 0.3
    lo, hi = deviation_envelope(ex26.deviation, t)
    assert lo == hi == pytest.approx(math.pi / 2 - t)
    dom = (-1.0, 1.0)
    free = DeviationSpec(lambda t, g: t, dom, state_dependent=True)
    assert deviation_envelope(free, 0.5) == dom
    bad = DeviationSpec(lambda t, g: t, dom, True, lambda t: (t + 2.0, t + 2.0))
    with pytest.raises(ConfigError):
        deviation_envelope(bad, 0.5)
    flipped = DeviationSpec(lambda t, g: t, dom, True, lambda t: (t, t - 0.5))
    with pytest.raises(ConfigError):
        deviation_envelope(flipped, 0.5)


def test_value_envelope_example26(ex26):
    b = default_bracket(ex26, 400)
    t = np.linspace(-math.pi / 2, math.pi, 37)
    e_min, e_max = value_envelope(b, ex26.deviation, t)
    np.testing.assert_allclose(e_min, t - math.pi, atol=1e-12)
    np.testing.assert_allclose(e_max, math.pi - t, atol=1e-12)


def test_value_envelope_constant_bracket():
    grid = make_grid(0, 1, 1, 4, 4)
    c = GridFun.constant(grid, 2.5)
    b = make_bracket(c, c, FunctionalSpec("constant", (0.0,)))
    dev = DeviationSpec(lambda t, g: t, (-1.0, 1.0), True)
    assert value_envelope(b, dev, 0.4) == (2.5, 2.5)


def test_lambda_bounds_monotone_kinds():
    grid = make_grid(0, 1, 1, 4, 4)
    a = GridFun.from_callable(grid, lambda t: t - 1)
    b = GridFun.from_callable(grid, lambda t: t + 1)
    assert lambda_bounds(parse_functional("constant:0"), (a, b)) == (0.0, 0.0, True)
    assert lambda_bounds(parse_functional("eval_at:-0.5"), (a, b)) == (-1.5, 0.5, True)


def test_lambda_bounds_native_square():
    grid = make_grid(0, 1, 1, 4, 4)
    lam = FunctionalSpec("native", native=lambda g: g(0.25) ** 2)
    lo, hi, exact = lambda_bounds(lam, (GridFun.constant(grid, -1.0), GridFun.constant(grid, 1.0)),
                                  samples=10_000, seed=0)
    assert not exact
    assert lo >= 0.0 and lo <= 0.05
    assert hi == 1.0


def test_verify_pure_delay_unit_pair(ex24):
    b = _unit_bracket(ex24.grid(100))
    new = verify_new(ex24, b)
    assert not new.passed
    assert new.worst_lower_ode == pytest.approx(-1.0, abs=1e-12)
    classical = verify_classical(ex24, b)
    assert classical.passed


def test_verify_example26_pair(ex26):
    b = default_bracket(ex26, 500)
    rep = verify_new(ex26, b)
    assert rep.passed and rep.worst >= -1e-12
    assert verify_classical(ex26, b).passed


def test_verify_reflection_pair(ex28):
    b = default_bracket(ex28, 500)
    assert verify_new(ex28, b).passed
    assert verify_classical(ex28, b).passed


def test_verify_reports_domain_error_as_indeterminate():
    grid = make_grid(0, 0, 1, 0, 10)
    dev = DeviationSpec(lambda t, g: t, (0.0, 1.0), True)
    p = ProblemSpec(0.0, 0.0, 1.0, RhsSpec(ExprFunction("1/y")), dev,
                    FunctionalSpec("constant", (0.0,)), lambda t: 0 * t)
    b = make_bracket(GridFun.constant(grid, -1.0), GridFun.constant(grid, 1.0), p.boundary)
    rep = verify_new(p, b, quad_nodes=65)
    assert rep.verdict == "indeterminate"
    assert "division by zero" in rep.error


def test_affine_in_xi_extremum_is_the_endpoint_value():
    grid = make_grid(0, 1, 1, 20, 20)
    dev = DeviationSpec(lambda t, g: t, (-1.0, 1.0), True)
    p = ProblemSpec(0.0, 1.0, 1.0, RhsSpec(lambda t, x, y: 3.0 * y - 0.7 + 0 * t), dev,
                    FunctionalSpec("constant", (0.0,)), lambda t: 0 * t)
    a = GridFun.constant(grid, -2.0)
    b = GridFun.constant(grid, 5.0)
    rep = verify_new(p, make_bracket(a, b, p.boundary))
    # lower margin min over [-2, 5] of 3 xi - 0.7 minus alpha' = -6.7; upper = 0 - 14.3
    np.testing.assert_array_equal(rep.lower_ode, np.full(20, -6.7))
    np.testing.assert_array_equal(rep.upper_ode, np.full(20, -(3.0 * 5.0 - 0.7)))


def test_report_csv_and_labels(ex24):
    rep = verify_new(ex24, _unit_bracket(ex24.grid(10)))
    text = rep.to_csv()
    lines = text.splitlines()
    assert lines[0] == "t,kind,margin"
    assert lines[-1].startswith("# definition=new verdict=fail")
    assert len(lines) == 1 + 2 * 10 + 2 * 11 + 1


def test_marginal_pass_label():
    grid = make_grid(0, 0, 1, 0, 4)
    dev = DeviationSpec(lambda t, g: t, (0.0, 1.0), True)
    p = ProblemSpec(0.0, 0.0, 1.0, RhsSpec(lambda t, x, y: -1e-12 + 0 * y), dev,
                    FunctionalSpec("constant", (0.0,)), lambda t: 0 * t)
    rep = verify_new(p, make_bracket(GridFun.constant(grid, 0.0), GridFun.constant(grid, 0.0),
                                     p.boundary))
    assert rep.passed and rep.marginal and rep.label() == "pass/marginal"
