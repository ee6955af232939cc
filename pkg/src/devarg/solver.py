"""Numerical solution of problems with deviated arguments.

Three routes are offered:

* fixed-point iteration of the truncated integral operator ``T`` (works for
  any deviation, needs a bracket, convergence is not guaranteed);
* the method of steps for strictly retarded deviations (no bracket);
* monotone iteration from a lower or an upper solution, for ``f``
  nondecreasing in the deviated state and a state-independent deviation.

Every route reports an a posteriori residual of the original problem.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .bracket import BracketPair, deviation_envelope, truncate, value_envelope
from .errors import DomainError, GridError, SolverError
from .gridfun import GridFun, TimeGrid
from .problem import ProblemSpec

__all__ = [
    "SolveOptions",
    "SolveReport",
    "ResidualReport",
    "apply_T",
    "picard_solve",
    "steps_solve",
    "monotone_solve",
    "scalar_step",
    "residual",
    "solve",
]

log = logging.getLogger(__name__)

Method = Literal["picard", "steps", "monotone_from_lower", "monotone_from_upper"]


@dataclass(frozen=True)
class SolveOptions:
    method: Method = "picard"
    max_iter: int = 200
    fp_tol: float = 1e-10
    grid: TimeGrid | None = None
    damping: float = 1.0
    init: str | GridFun = "mid"
    substeps: int = 1
    keep_trace: bool = True

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")


@dataclass
class ResidualReport:
    """Defects of a candidate in the differential equation and the start condition."""

    ode_resid_sup: float
    boundary_resid_sup: float
    failures: list[float] = field(default_factory=list)


@dataclass
class SolveReport:
    solution: GridFun
    converged: bool
    iterations: int
    sup_step: float
    residual: ResidualReport
    method: str = "picard"
    iterate_trace: list[GridFun] | None = None
    fp_defect: float | None = None
    below_alpha: float | None = None
    above_beta: float | None = None
    message: str = ""


# --- building blocks ------------------------------------------------------


def _stage_times(t_a: float, t_b: float, substeps: int) -> list[float]:
    """The abscissae visited by :func:`scalar_step`, computed the same way."""
    h = (t_b - t_a) / substeps
    out = []
    t = t_a
    for i in range(substeps):
        out += [t, t + 0.5 * h, t + h]
        t = t_b if i == substeps - 1 else t_a + (i + 1) * h
    return out


def scalar_step(
    f_frozen: Callable[[float, float], float], t_a: float, t_b: float, x_a: float, substeps: int = 1
) -> float:
    """Classical RK4 for x' = f_frozen(t, x) from (t_a, x_a) to t_b."""
    if not t_a < t_b:
        raise ValueError(f"need t_a < t_b, got {t_a!r}, {t_b!r}")
    h = (t_b - t_a) / substeps
    t, x = t_a, float(x_a)
    isfinite = math.isfinite
    for i in range(substeps):
        k1 = f_frozen(t, x)
        x2 = x + 0.5 * h * k1
        k2 = f_frozen(t + 0.5 * h, x2)
        x3 = x + 0.5 * h * k2
        k3 = f_frozen(t + 0.5 * h, x3)
        x4 = x + h * k3
        k4 = f_frozen(t + h, x4)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not all(isfinite(v) for v in (k1, k2, k3, k4, x2, x3, x4, x)):
            raise DomainError("non-finite state in RK4 step", t)
        t = t_b if i == substeps - 1 else t_a + (i + 1) * h
    return x


def _grid_for(p: ProblemSpec, opts: SolveOptions, b: BracketPair | None = None) -> TimeGrid:
    if b is not None:
        grid = b.grid
        if opts.grid is not None and not opts.grid.same_as(grid):
            raise GridError("solve grid differs from the bracket grid")
    else:
        grid = opts.grid if opts.grid is not None else p.grid(1000)
    if (grid.t0, grid.r, grid.L) != (p.t0, p.r, p.L):
        raise GridError("grid does not match the problem's interval data")
    return grid


def apply_T(p: ProblemSpec, b: BracketPair, gamma: GridFun) -> GridFun:
    """One application of the truncated integral operator.

    On I_-: Lambda(p(gamma)) + k(t). On I_0: the same constant plus k(t0) plus
    the integral of f(s, p(s, gamma(s)), p(tau(s, gamma), gamma(tau(s, gamma))))
    from t0, with one midpoint sample of the integrand per cell.
    """
    grid = gamma.grid
    if not grid.same_as(b.grid):
        raise GridError("iterate and bracket live on different grids")
    clipped = gamma.with_values(np.clip(gamma.values, b.alpha.values, b.beta.values))
    lam = p.boundary(clipped)
    i0 = grid.i0
    k_minus = np.broadcast_to(np.asarray(p.k(grid.minus_nodes), dtype=float), (i0 + 1,))
    m = grid.plus_midpoints
    xm = truncate(m, gamma(m), b)
    s = p.deviation(m, gamma)
    ys = truncate(s, gamma(s), b)
    integrand = np.broadcast_to(np.asarray(p.f(m, xm, ys), dtype=float), m.shape)
    out = np.empty(grid.nodes.size)
    out[: i0 + 1] = lam + k_minus
    out[i0 + 1 :] = out[i0] + np.cumsum(integrand * grid.plus_widths)
    return GridFun(grid, out)


def residual(p: ProblemSpec, x: GridFun) -> ResidualReport:
    """Sup defects: |x' - f(t, x, x(tau(t, x)))| at I_0 midpoints, |x - Lambda(x) - k| on I_-."""
    grid = x.grid
    m = grid.plus_midpoints
    slopes = x.plus_slopes
    failures: list[float] = []
    try:
        fv = np.asarray(p.f(m, x(m), x(p.deviation(m, x))), dtype=float)
        ode = float(np.max(np.abs(slopes - fv)))
    except DomainError:
        ode = 0.0
        for i, t in enumerate(m):
            try:
                fi = float(p.f(t, x(t), x(float(p.deviation(np.array([t]), x)[0]))))
            except DomainError:
                failures.append(float(t))
                continue
            ode = max(ode, abs(slopes[i] - fi))
        if failures:
            ode = np.inf
    tm = grid.minus_nodes
    k = np.asarray(p.k(tm), dtype=float)
    bnd = float(np.max(np.abs(x.values[: tm.size] - p.boundary(x) - k)))
    return ResidualReport(ode, bnd, failures)


def _initial(p: ProblemSpec, b: BracketPair, init) -> GridFun:
    if isinstance(init, GridFun):
        if not init.grid.same_as(b.grid):
            raise GridError("initial iterate lives on a different grid")
        return init
    if init == "lower":
        return b.alpha
    if init == "upper":
        return b.beta
    if init == "mid":
        return b.alpha.with_values(0.5 * (b.alpha.values + b.beta.values))
    raise ValueError(f"unknown initial iterate {init!r}")


# --- solvers ----------------------------------------------------------------


def picard_solve(p: ProblemSpec, b: BracketPair, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Damped fixed-point iteration of :func:`apply_T`.

    Stops when two successive iterates are within ``fp_tol`` in sup norm.
    Running out of iterations is reported (``converged=False``), not raised.
    """
    _grid_for(p, opts, b)
    gamma = _initial(p, b, opts.init)
    d = opts.damping
    step = np.inf
    converged = False
    n = 0
    for n in range(1, opts.max_iter + 1):
        tg = apply_T(p, b, gamma)
        new = gamma.with_values((1.0 - d) * gamma.values + d * tg.values) if d < 1 else tg
        step = new.sup_distance(gamma)
        gamma = new
        if step <= opts.fp_tol:
            converged = True
            break
    defect = apply_T(p, b, gamma).sup_distance(gamma)
    res = residual(p, gamma)
    msg = f"converged in {n} iterations" if converged else f"no convergence after {n} iterations"
    log.debug("picard: %s, last step %.3e", msg, step)
    return SolveReport(
        gamma, converged, n, float(step), res, "picard",
        fp_defect=defect,
        below_alpha=float(np.max(b.alpha.values - gamma.values)),
        above_beta=float(np.max(gamma.values - b.beta.values)),
        message=msg,
    )


def _frozen_rhs(p: ProblemSpec, hist: Callable, t_a: float, t_b: float, substeps: int = 1):
    """f(t, x, hist(tau(t))) on one cell, with the deviated values precomputed.

    ``hist`` maps an array of times to values. The equation only has to hold
    almost everywhere, so if ``f`` is undefined exactly at a cell end (a
    removable point such as -t/y at t = y = 0), the value is taken just
    inside the cell instead.
    """
    eta = 1e-9 * (t_b - t_a)
    ts = _stage_times(t_a, t_b, substeps)
    ys = np.asarray(hist(p.deviation(np.asarray(ts))), dtype=float)
    table = dict(zip(ts, ys.tolist()))
    f = p.f

    def deviated(t: float) -> float:
        y = table.get(t)
        if y is None:
            y = float(np.asarray(hist(p.deviation(np.array([t]))))[0])
        return y

    def g(t, x):
        try:
            return float(f(t, x, deviated(t)))
        except DomainError:
            if t == t_a:
                tn = t + eta
            elif t == t_b:
                tn = t - eta
            else:
                raise
            return float(f(tn, x, deviated(tn)))

    return g


def steps_solve(p: ProblemSpec, opts: SolveOptions = SolveOptions(method="steps")) -> SolveReport:
    """Method of steps for strictly retarded, state-independent deviations.

    Requires tau(t) <= t - delta for some delta > 0 (checked on a dense
    sample) and a constant start functional. On each step of length delta the
    deviated term is already known, so the equation is a scalar ODE.
    """
    if p.deviation.state_dependent:
        raise SolverError("method of steps needs a state-independent deviation")
    if not p.boundary.is_constant:
        raise SolverError("method of steps needs a constant start functional")
    grid = _grid_for(p, opts)
    sample = np.linspace(p.t0, p.t0 + p.L, 4097)
    gaps = sample - p.deviation(sample)
    delta = float(np.min(gaps))
    if p.deviation.delay is not None:
        delta = min(delta, p.deviation.delay)
    if not delta > 0:
        raise SolverError("deviation is not strictly retarded (tau(t) <= t - delta fails)")
    lam = float(p.boundary.params[0])

    nodes = grid.nodes
    i0 = grid.i0
    values = np.empty(nodes.size)
    values[: i0 + 1] = lam + np.asarray(p.k(grid.minus_nodes), dtype=float)
    # knots of the computed part of the solution on I_0 (nodes and step breaks)
    kt = [p.t0]
    kx = [values[i0]]

    def hist(s):
        s = np.asarray(s, dtype=float)
        if np.any(s > kt[-1] + grid.snap_tol):
            raise SolverError(f"deviated time {float(np.max(s))!r} not yet computed")
        past = s <= p.t0
        out = np.interp(s, kt, kx)
        if np.any(past):
            out[past] = lam + np.asarray(p.k(s[past]), dtype=float)
        return out

    for i in range(i0, nodes.size - 1):
        a, b_end = nodes[i], nodes[i + 1]
        cuts = [a]
        j = int(np.floor((a - p.t0) / delta)) + 1
        while p.t0 + j * delta < b_end:
            cuts.append(p.t0 + j * delta)
            j += 1
        cuts.append(b_end)
        x = kx[-1]
        for ta, tb in zip(cuts[:-1], cuts[1:]):
            if tb <= ta:
                continue
            x = scalar_step(_frozen_rhs(p, hist, ta, tb, opts.substeps), ta, tb, x, opts.substeps)
            kt.append(tb)
            kx.append(x)
        values[i + 1] = x
    sol = GridFun(grid, values)
    n_steps = int(np.ceil(p.L / delta - 1e-12))
    return SolveReport(sol, True, n_steps, 0.0, residual(p, sol), "steps",
                       message=f"{n_steps} step(s) of length {delta!r}")


def _check_monotone(p: ProblemSpec, b: BracketPair, samples: int = 1000, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    t = rng.uniform(p.t0, p.t0 + p.L, samples)
    t = t[t > p.t0]
    lo, hi = b.alpha(t), b.beta(t)
    x = lo + rng.uniform(size=t.size) * (hi - lo)
    e_min, e_max = value_envelope(b, p.deviation, t)
    u = np.sort(rng.uniform(size=(2, t.size)), axis=0)
    y1 = e_min + u[0] * (e_max - e_min)
    y2 = e_min + u[1] * (e_max - e_min)
    f1 = np.asarray(p.f(t, x, y1), dtype=float)
    f2 = np.asarray(p.f(t, x, y2), dtype=float)
    bad = f1 > f2 + 1e-12
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SolverError(
            f"f is not nondecreasing in y: f({t[i]:.6g}, {x[i]:.6g}, {y1[i]:.6g}) > "
            f"f(..., {y2[i]:.6g})"
        )


def monotone_solve(p: ProblemSpec, b: BracketPair, opts: SolveOptions) -> SolveReport:
    """Monotone iteration from alpha (``monotone_from_lower``) or beta.

    x_{n+1} solves x' = f(t, x, x_n(tau(t))) on I_0 with x_{n+1} = Lambda(x_n) + k
    on I_-. With f nondecreasing in its third argument and Lambda monotone,
    the iterates increase from alpha and decrease from beta.
    """
    if p.rhs.monotone_in_y != "nondecreasing":
        raise SolverError("monotone iteration needs f flagged nondecreasing in y")
    if not p.boundary.monotone:
        raise SolverError("monotone iteration needs a nondecreasing start functional")
    if p.deviation.state_dependent:
        raise SolverError("monotone iteration needs a state-independent deviation")
    if opts.method not in ("monotone_from_lower", "monotone_from_upper"):
        raise ValueError(f"method {opts.method!r} is not a monotone method")
    grid = _grid_for(p, opts, b)
    _check_monotone(p, b)

    x = b.alpha if opts.method == "monotone_from_lower" else b.beta
    trace = [x]
    nodes = grid.nodes
    i0 = grid.i0
    k_minus = np.asarray(p.k(grid.minus_nodes), dtype=float)
    step = np.inf
    converged = False
    n = 0
    for n in range(1, opts.max_iter + 1):
        lam = p.boundary(x)
        values = np.empty(nodes.size)
        values[: i0 + 1] = lam + k_minus
        prev = x
        for i in range(i0, nodes.size - 1):
            ta, tb = nodes[i], nodes[i + 1]
            values[i + 1] = scalar_step(_frozen_rhs(p, prev, ta, tb, opts.substeps), ta, tb, values[i],
                                        opts.substeps)
        x = GridFun(grid, values)
        if opts.keep_trace:
            trace.append(x)
        step = x.sup_distance(prev)
        if step <= opts.fp_tol:
            converged = True
            break
    msg = f"converged in {n} iterations" if converged else f"no convergence after {n} iterations"
    return SolveReport(
        x, converged, n, float(step), residual(p, x), opts.method,
        iterate_trace=trace if opts.keep_trace else None,
        below_alpha=float(np.max(b.alpha.values - x.values)),
        above_beta=float(np.max(x.values - b.beta.values)),
        message=msg,
    )


def solve(p: ProblemSpec, b: BracketPair | None, opts: SolveOptions) -> SolveReport:
    """Dispatch on ``opts.method``."""
    if opts.method == "steps":
        return steps_solve(p, opts)
    if b is None:
        raise SolverError(f"method {opts.method} needs a bracket")
    if opts.method == "picard":
        return picard_solve(p, b, opts)
    return monotone_solve(p, b, opts)
