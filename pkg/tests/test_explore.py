import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from devarg.construct import default_bracket
from devarg.errors import GridError
from devarg.explore import compare, dedup, default_seeds, extremal_search, functional_I
from devarg.gridfun import GridFun, make_grid
from devarg.solver import SolveOptions

FAMILY_OPTS = SolveOptions(max_iter=500, fp_tol=1e-6, damping=0.4375)


@pytest.fixture(scope="module")
def cos_grid():
    return make_grid(-math.pi / 2, 1.0, 1.5 * math.pi, 2000, 10000)


@pytest.fixture(scope="module")
def ex26_report(ex26):
    b = default_bracket(ex26, 400)
    return extremal_search(ex26, b, opts=FAMILY_OPTS, n_seeds=9)


def test_functional_I_examples(cos_grid):
    x = GridFun.from_callable(cos_grid, lambda t: 0.5 * np.cos(t))
    assert functional_I(x) == pytest.approx(0.5, abs=1e-6)
    assert functional_I(GridFun.constant(cos_grid, 0.0)) == 0.0
    assert functional_I(GridFun.constant(cos_grid, 1.0), 0.0, 1.0) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_functional_I_linearity(cos_grid, a, b):
    x = GridFun.from_callable(cos_grid, np.sin)
    y = GridFun.from_callable(cos_grid, lambda t: t**2)
    lhs = functional_I(x.with_values(a * x.values + b * y.values))
    rhs = a * functional_I(x) + b * functional_I(y)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_compare_examples(cos_grid):
    c = GridFun.from_callable(cos_grid, np.cos)
    zero = GridFun.constant(cos_grid, 0.0)
    assert compare(c, zero) == "incomparable"
    assert compare(c, c) == "equal"
    assert compare(zero, GridFun.constant(cos_grid, 1.0)) == "leq"
    assert compare(GridFun.constant(cos_grid, 1.0), zero) == "geq"
    assert compare(zero, GridFun.constant(cos_grid, 1e-10)) == "equal"
    with pytest.raises(GridError):
        compare(zero, GridFun.constant(make_grid(0.0, 1.0, 1.0, 4, 4), 0.0))


def test_default_seeds_span_the_bracket(ex26):
    b = default_bracket(ex26, 50)
    seeds = default_seeds(b, 9)
    assert len(seeds) == 9
    assert np.array_equal(seeds[0].values, b.alpha.values)
    assert np.allclose(seeds[-1].values, b.beta.values, atol=1e-15)
    with pytest.raises(ValueError):
        default_seeds(b, 0)


def test_family_search_finds_incomparable_solutions(ex26_report):
    rep = ex26_report
    assert len(rep.solutions) >= 3
    assert rep.has_incomparable_pair
    iv = np.array(rep.i_values)
    c = float(np.max(iv))
    assert c > 0 and np.any(np.abs(iv + c) <= 1e-6 * max(1.0, c) + 1e-4)
    assert rep.flagged == []


def test_family_members_fit_lambda_cos(ex26_report):
    for r in ex26_report.solutions:
        x = r.solution
        lam = x(0.0)
        assert r.residual.ode_resid_sup <= 1e-4
        assert np.max(np.abs(x.values - lam * np.cos(x.grid.nodes))) <= 1e-3
        assert functional_I(x) == pytest.approx(lam, abs=1e-3)


def test_report_invariants(ex26_report):
    rep = ex26_report
    n = len(rep.solutions)
    mat = rep.comparability
    flip = {"leq": "geq", "geq": "leq", "equal": "equal", "incomparable": "incomparable"}
    for i in range(n):
        assert mat[i][i] == "equal"
        for j in range(n):
            assert mat[j][i] == flip[mat[i][j]]
    assert rep.i_values[rep.argmax_i] == max(rep.i_values)
    assert rep.i_values[rep.argmin_i] == min(rep.i_values)
    # the I-maximizer is maximal in the computed set
    top = rep.argmax_i
    assert all(mat[j][top] != "geq" for j in range(n) if j != top)
    assert rep.i_values == sorted(rep.i_values)


def test_dedup_is_idempotent(ex26_report):
    xs = [r.solution for r in ex26_report.solutions]
    tol = 10 * FAMILY_OPTS.fp_tol
    keep = dedup(xs, tol)
    assert keep == list(range(len(xs)))
    doubled = xs + xs
    once = [doubled[i] for i in dedup(doubled, tol)]
    assert dedup(once, tol) == list(range(len(once)))


def test_report_serialization(ex26_report):
    rep = ex26_report
    rows = rep.to_csv().splitlines()
    assert rows[0] == "index,seed,converged,iterations,ode_resid,boundary_resid,I,flag"
    data = [r for r in rows[1:] if not r.startswith("#")]
    assert len(data) == len(rep.solutions)
    assert "max_I" in data[rep.argmax_i] and "min_I" in data[rep.argmin_i]
    mrows = rep.matrix_csv().splitlines()
    assert len(mrows) == len(rep.solutions) + 1
    assert "maximal among computed solutions" in rep.summary()


def test_reflection_problem_has_a_single_solution(ex28):
    b = default_bracket(ex28, 200)
    rep = extremal_search(ex28, b, n_seeds=5)
    assert len(rep.solutions) >= 1 and not rep.failures
    assert not rep.has_incomparable_pair
    # the converged iterates agree within 1e-6 before dedup merges them
    assert len(extremal_search(ex28, b, n_seeds=5, opts=SolveOptions(fp_tol=1e-7)).solutions) == 1


def test_single_seed_run(ex28):
    b = default_bracket(ex28, 200)
    rep = extremal_search(ex28, b, seeds=[b.alpha])
    assert len(rep.solutions) == 1
    assert rep.comparability == [["equal"]]
    assert rep.argmax_i == rep.argmin_i == 0


def test_foreign_seed_is_recorded_not_fatal(ex28):
    b = default_bracket(ex28, 200)
    other = GridFun.constant(make_grid(0.0, 1.0, 1.0, 10, 10), 0.0)
    rep = extremal_search(ex28, b, seeds=[other, b.beta])
    assert len(rep.solutions) == 1
    assert rep.failures and rep.failures[0][0] == 0
