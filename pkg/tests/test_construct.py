import math

import numpy as np
import pytest

from devarg.bracket import verify_new
from devarg.construct import (
    EnvelopePair,
    construct_autonomous,
    construct_enveloped,
    construct_for_problem,
    default_bracket,
    find_thresholds,
    history_extrema,
)
from devarg.errors import ConfigError, DomainExhausted, HypothesesViolated
from devarg.registry import builtin_problem, log_sine


def zero(t):
    return 0.0 * np.asarray(t)


def _log_grid(lo, hi, n):
    """Brute-force oracle abscissae: symmetric log spacing plus a fine linear core."""
    pos = np.geomspace(1e-6, hi, n // 2)
    core = np.linspace(-20, 20, 400_001)
    return np.unique(np.concatenate([-pos[::-1], core, pos]))


def test_history_extrema_examples():
    lo, hi = history_extrema(lambda t: -t * np.cos(t), 0.0, math.pi)
    assert lo == pytest.approx(-math.pi, abs=1e-12)
    assert abs(hi - 0.5611) <= 1e-3
    assert history_extrema(lambda t: 0 * t + 2.0, 0.0, 1.0) == (2.0, 2.0)
    assert history_extrema(lambda t: -t, 0.0, 1.0) == (0.0, 1.0)
    assert history_extrema(lambda t: t + 5.0, 1.0, 0.0) == (6.0, 6.0)


def test_thresholds_half_identity_match_the_analytic_answer():
    # F(y) = y/2: 0 > y/2 > y for every y < 0, so any negative grid point works as y1,
    # F is increasing, hence lambda = F(y1) and y3 = y1
    tr = find_thresholds(lambda y: y / 2, 0.0, 0.0, 1.0, (-100.0, 100.0))
    assert tr.y1 < 0
    assert tr.lambda_min == tr.y1 / 2
    assert tr.y3 == tr.y1
    assert tr.m == (tr.phi_star - tr.y3) / 1.0 == -tr.y1
    assert tr.y3_bar == -tr.y3 and tr.m_bar == tr.m


def test_thresholds_log_sine_against_brute_force():
    tr = find_thresholds(log_sine, 0.0, 0.0, 1.0)
    ys = _log_grid(-1e6, 1e6, 1_000_000)
    F = log_sine(ys)
    below = ys <= tr.y1
    assert np.all((F[below] < 0) & (F[below] > ys[below]))
    assert np.all(F[ys >= tr.y2] > 0)
    window = (ys >= tr.y1) & (ys <= tr.y2)
    assert abs(tr.lambda_min - F[window].min()) <= 1e-9
    assert tr.lambda_min <= -1.0 + 1e-12
    assert log_sine(tr.y3) == pytest.approx(tr.lambda_min, abs=1e-9)
    seg = (ys >= tr.y3) & (ys <= tr.y1)
    assert np.all(F[seg] >= tr.lambda_min - 1e-9)
    assert np.all(F[ys >= tr.y3] >= tr.lambda_min - 1e-9)
    # trace invariants
    assert tr.y3 <= tr.y1 <= min(0.0, tr.phi_star)
    assert tr.y3_bar >= max(0.0, tr.phi_upper)
    assert tr.m == (tr.phi_star - tr.y3) / 1.0 and tr.m >= 0
    assert tr.m_bar == (tr.y3_bar - tr.phi_upper) / 1.0 and tr.m_bar >= 0
    assert tr.m_bar_opposite == -tr.m_bar


def test_identity_violates_the_growth_condition():
    with pytest.raises(HypothesesViolated) as info:
        find_thresholds(lambda y: y, 0.0, 0.0, 1.0)
    assert "1/L" in info.value.condition
    with pytest.raises(HypothesesViolated):
        construct_autonomous(lambda y: y, zero, (0.0, 1.0, 1.0))


def test_small_domain_is_reported_as_exhausted():
    # F(y) = y/2 - 20 turns positive only beyond y = 40, outside (-1000, 30)
    with pytest.raises(DomainExhausted) as info:
        find_thresholds(lambda y: y / 2 - 20, 0.0, 0.0, 1.0, (-1000.0, 30.0))
    assert info.value.side == "lower"


def test_bounded_function_violates_the_lower_growth_condition():
    with pytest.raises(HypothesesViolated, match="-inf"):
        find_thresholds(lambda y: -1.0 + 0.0 * y, 0.0, 0.0, 1.0, (-1000.0, 1000.0))


def test_threshold_preconditions():
    with pytest.raises(ConfigError):
        find_thresholds(log_sine, 0.0, 0.0, 1.0, (1.0, 10.0))
    with pytest.raises(ConfigError):
        find_thresholds(log_sine, 0.0, 0.0, 1.0, grid=50)


@pytest.mark.parametrize("L", [1.0, 5.0])
def test_autonomous_construction_verifies(L):
    pair, tr = construct_autonomous(log_sine, zero, (0.0, 1.0, L), 500)
    g = pair.grid
    assert pair.alpha.values[-1] == tr.y3 and pair.beta.values[-1] == tr.y3_bar
    assert np.all(pair.alpha.values[: g.i0 + 1] == tr.phi_star)
    assert np.all(pair.beta.values[: g.i0 + 1] == tr.phi_upper)
    assert np.all(np.diff(pair.alpha.values) <= 0) and np.all(np.diff(pair.beta.values) >= 0)
    p = builtin_problem("example3_2", L=L)
    rep = verify_new(p, pair, envelope="whole")
    assert rep.passed and rep.worst >= -1e-9


def test_autonomous_history_sits_inside_the_bracket():
    k = lambda t: np.sin(3 * t) + 0.5 * t  # noqa: E731
    pair, tr = construct_autonomous(log_sine, k, (0.0, 1.0, 2.0), 300)
    tm = pair.grid.minus_nodes
    assert np.all(pair.alpha(tm) <= k(tm) + 1e-12) and np.all(k(tm) <= pair.beta(tm) + 1e-12)


def test_enveloped_construction_for_the_envelope_example():
    p = builtin_problem("example3_4")
    pair, tr = construct_for_problem(p, 1000)
    assert tr.phi_star == pytest.approx(-math.pi, abs=1e-12)
    assert abs(tr.phi_upper - 0.5611) <= 1e-3
    assert verify_new(p, pair, envelope="whole").passed
    assert verify_new(p, pair).passed


def test_enveloped_reduces_to_autonomous():
    env = EnvelopePair(log_sine, log_sine)
    f = lambda t, x, y: log_sine(np.broadcast_arrays(t, x, y)[2])  # noqa: E731
    _, tr_env = construct_enveloped(env, f, zero, (0.0, 1.0, 1.0), 200)
    _, tr_aut = construct_autonomous(log_sine, zero, (0.0, 1.0, 1.0), 200)
    assert tr_env == tr_aut
    assert tr_env.to_text() == tr_aut.to_text()


def test_enveloped_rejects_unbounded_lower_envelope():
    bad = lambda y: -1.0 / (1.0 + y**2) - y**2  # noqa: E731
    f = lambda t, x, y: bad(np.broadcast_arrays(t, x, y)[2])  # noqa: E731
    with pytest.raises(HypothesesViolated) as info:
        construct_enveloped(EnvelopePair(bad, log_sine), f, zero, (0.0, 1.0, 1.0))
    assert "bounded below on [0, +inf)" in info.value.condition


def test_enveloped_domination_check():
    f = lambda t, x, y: log_sine(y) - 1.0 + 0 * t * x  # noqa: E731
    with pytest.raises(HypothesesViolated, match="F_alpha"):
        construct_enveloped(EnvelopePair(log_sine, log_sine), f, zero, (0.0, 1.0, 1.0))


def test_default_bracket_paths(ex26):
    b = default_bracket(ex26, 100)
    assert b.alpha(0.0) == pytest.approx(-math.pi / 2)
    with pytest.raises(ConfigError):
        default_bracket(builtin_problem("example2_4"), 100)
    auto = default_bracket(builtin_problem("example3_2"), 100)
    assert auto.alpha.values[-1] < 0 < auto.beta.values[-1]


def test_trace_text_block():
    _, tr = construct_autonomous(log_sine, zero, (0.0, 1.0, 1.0), 100)
    lines = tr.to_text().splitlines()
    assert lines[0].startswith("phi_star = ")
    assert any(line.startswith("m_bar_opposite = ") for line in lines)
    assert lines[-1] == "search_domain = -1000000:1000000"
