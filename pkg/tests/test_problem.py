import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from devarg.errors import ConfigError
from devarg.gridfun import GridFun, make_grid
from devarg.problem import FunctionalSpec, load_problem, parse_config, parse_functional
from devarg.registry import BUILTINS, builtin_problem, log_sine

EX24_CONFIG = """
# pure delay example
t0 = 0
r = 1
L = 1
f = -y
tau = delay:1
lambda = constant:0
k = -t
"""


def test_builtin_reflection_example_from_config():
    p = load_problem("builtin = example2_8, L = 1")
    assert p.name == "example2_8"
    assert p.f(0.5, 0.0, -2.0) == pytest.approx(0.25)
    assert p.deviation(np.array([0.3]))[0] == -0.3
    t = np.linspace(-1, 0, 5)
    np.testing.assert_allclose(p.k(t), t * np.cos(t) - 3 * t)
    assert (p.t0, p.r, p.L) == (0.0, 1.0, 1.0)


def test_inline_config_pure_delay():
    p = load_problem(EX24_CONFIG)
    assert p.deviation(np.array([0.25]))[0] == -0.75
    assert p.deviation.delay == 1.0
    assert p.boundary.kind == "constant" and p.boundary.params == (0.0,)
    assert p.k(-0.5) == 0.5
    assert p.f(0.0, 0.0, 2.0) == -2.0


def test_missing_f():
    with pytest.raises(ConfigError, match="missing field f"):
        load_problem("L = 1\ntau = delay:1\nr = 1")


@pytest.mark.parametrize("text", [
    "f = -y\nL = 1\ntau = t - 2\nr = 1",        # tau escapes I
    "f = -y +\nL = 1\ntau = t",                 # parse error
    "f = -y\nL = 1\ntau = t\nwhat = 3",         # unknown key
    "f = -y\nL = 1\ntau = t\nk = log(t)",       # k undefined on I_- = {0}
    "f = -y\nL = 1\ntau = delay",               # missing delay length
    "f = x\nL = 1\ntau = t\nalpha = auto",      # auto needs f(y) alone
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        load_problem(text)


def test_config_parser_comments_and_inline_builtin_params():
    cfg = parse_config("builtin = example3_2, L = 5, k = sin(t)  # comment\n")
    assert cfg == {"builtin": "example3_2", "L": "5", "k": "sin(t)"}


def test_declared_tau_bounds_and_weighted_eval():
    p = load_problem("f = -y\nL = 1\nr = 1\ntau = weighted_eval:t - 1/(1 + x^2)\n"
                     "tau_lo = t - 1\ntau_hi = t")
    assert p.deviation.state_dependent
    lo, hi = p.deviation.envelope(np.array([0.5]))
    assert (lo[0], hi[0]) == (-0.5, 0.5)
    g = GridFun.constant(p.grid(10), 0.0)
    assert p.deviation(np.array([0.5]), g)[0] == pytest.approx(-0.5)


def test_auto_bracket_config_gets_autonomous_hint():
    p = load_problem("f = if(abs(y) > 1, sign(y)*log(abs(y)), sin(pi*y))\nL = 1\nr = 1\n"
                     "tau = reflection\nalpha = auto\nbeta = auto")
    assert p.construction.kind == "autonomous"
    ys = np.linspace(-5, 5, 41)
    np.testing.assert_allclose(p.construction.F_alpha(ys), log_sine(ys), atol=1e-15)


def test_functional_kinds():
    g = GridFun.from_callable(make_grid(0, 1, 1, 10, 10), lambda t: t)
    assert parse_functional("constant:2")(g) == 2.0
    assert parse_functional("eval_at:-1")(g) == -1.0
    assert parse_functional("mean")(g) == pytest.approx(0.0, abs=1e-15)
    assert parse_functional("sup:-1:0")(g) == 0.0
    assert parse_functional("inf:-1:0")(g) == -1.0
    with pytest.raises(ConfigError):
        parse_functional("median")
    with pytest.raises(ConfigError):
        parse_functional("sup:1:0")


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["constant:1", "eval_at:-0.3", "mean",
                                                    "sup:-1:0.5", "inf:-0.2:1"]))
def test_builtin_functionals_are_monotone(seed, kind):
    rng = np.random.default_rng(seed)
    grid = make_grid(0, 1, 1, 8, 8)
    g1 = GridFun(grid, rng.normal(size=grid.nodes.size))
    g2 = g1.with_values(g1.values + rng.uniform(0, 1, grid.nodes.size))
    lam = parse_functional(kind)
    assert lam.monotone
    assert lam(g1) <= lam(g2)


def test_log_sine_is_continuous_and_odd():
    ys = np.array([-1.0, 1.0])
    np.testing.assert_allclose(log_sine(ys), [0.0, 0.0], atol=1e-15)
    y = np.linspace(-50, 50, 1001)
    np.testing.assert_allclose(log_sine(-y), -log_sine(y), atol=1e-15)
    assert log_sine(-math.e) == pytest.approx(-1.0)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_registry_deviations_respect_bounds(name):
    p = builtin_problem(name)
    rng = np.random.default_rng(7)
    grid = p.grid(40)
    a, b = p.domain
    tol = grid.snap_tol
    for _ in range(10):
        gamma = GridFun(grid, rng.normal(scale=5, size=grid.nodes.size))
        t = rng.uniform(p.t0, p.t0 + p.L, 100)
        tau = p.deviation(t, gamma)
        lo, hi = p.deviation.envelope(t)
        assert np.all(tau >= a - tol) and np.all(tau <= b + tol)
        assert np.all(tau >= lo - tol) and np.all(tau <= hi + tol)


def test_example26_rhs_bounded_by_one(ex26):
    rng = np.random.default_rng(3)
    t, x, y = rng.normal(scale=10, size=(3, 1000))
    assert np.all(np.abs(ex26.f(t, x, y)) <= 1.0)


def test_builtin_parameters():
    p = builtin_problem("example3_2", L="5", k="sin(t)")
    assert p.L == 5.0
    assert p.k(-0.5) == pytest.approx(math.sin(-0.5))
    with pytest.raises(ConfigError):
        builtin_problem("example3_4", g="-1")
    with pytest.raises(ConfigError):
        builtin_problem("example2_4", L="2")
    with pytest.raises(ConfigError):
        builtin_problem("nope")


def test_envelope_example_domination(ex26):
    p = builtin_problem("example3_4")
    rng = np.random.default_rng(5)
    t = rng.uniform(0, 1, 500)
    y = rng.normal(scale=20, size=500)
    below = -math.pi - rng.uniform(0, 30, 500)
    above = -math.pi + rng.uniform(0, 30, 500)
    assert np.all(p.f(t, below, y) >= log_sine(y))
    assert np.all(p.f(t, above, y) <= log_sine(y))
