"""Lower/upper solution pairs: truncation, envelopes and verification.

Two notions are checked. The *new* one compares alpha' with the minimum of
``f(t, alpha(t), xi)`` over every value ``xi`` the deviated state can take
inside the bracket (the envelope E(t)), and the start condition with the
inf/sup of Lambda over the whole order interval. The *classical* one only
evaluates ``f`` along alpha (resp. beta) itself. The new notion implies the
classical one, not conversely.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import BracketError, ConfigError, DomainError, GridError
from .gridfun import GridFun, range_extrema
from .optimize import scan_max, scan_min
from .problem import DeviationSpec, FunctionalSpec, ProblemSpec

__all__ = [
    "BracketPair",
    "VerificationReport",
    "make_bracket",
    "truncate",
    "deviation_envelope",
    "value_envelope",
    "lambda_bounds",
    "verify_new",
    "verify_classical",
    "verify",
]


@dataclass(frozen=True, eq=False)
class BracketPair:
    """An ordered pair alpha <= beta on a common grid plus bounds of Lambda on [alpha, beta]."""

    alpha: GridFun
    beta: GridFun
    lambda_inf: float = 0.0
    lambda_sup: float = 0.0
    lambda_bounds_exact: bool = True

    def __post_init__(self):
        if not self.alpha.grid.same_as(self.beta.grid):
            raise BracketError("alpha and beta must share a grid")
        bad = self.alpha.values > self.beta.values
        if np.any(bad):
            t = self.alpha.grid.nodes[np.argmax(bad)]
            raise BracketError(f"alpha > beta at t = {t!r}")
        if self.lambda_inf > self.lambda_sup:
            raise BracketError("lambda_inf > lambda_sup")

    @property
    def grid(self):
        return self.alpha.grid


def lambda_bounds(
    lam: FunctionalSpec,
    b: BracketPair | tuple[GridFun, GridFun],
    samples: int = 1000,
    seed: int = 0,
) -> tuple[float, float, bool]:
    """Bounds of Lambda over the order interval [alpha, beta].

    Monotone kinds are exact: (Lambda(alpha), Lambda(beta)). Otherwise the
    bounds are empirical, from ``samples`` random functions
    ``alpha + w (beta - alpha)`` with i.i.d. uniform node weights ``w``,
    together with alpha and beta themselves.
    """
    alpha, beta = (b.alpha, b.beta) if isinstance(b, BracketPair) else b
    if lam.monotone:
        lo, hi = lam(alpha), lam(beta)
        return float(lo), float(hi), True
    if samples < 1:
        raise ValueError("need at least one sample for a non-monotone functional")
    rng = np.random.default_rng(seed)
    vals = [lam(alpha), lam(beta)]
    width = beta.values - alpha.values
    for _ in range(samples):
        w = rng.uniform(0.0, 1.0, width.shape)
        vals.append(lam(alpha.with_values(alpha.values + w * width)))
    return float(min(vals)), float(max(vals)), False


def make_bracket(
    alpha: GridFun, beta: GridFun, boundary: FunctionalSpec, samples: int = 1000, seed: int = 0
) -> BracketPair:
    """Order-check (alpha, beta) and attach the Lambda bounds."""
    BracketPair(alpha, beta)
    lo, hi, exact = lambda_bounds(boundary, (alpha, beta), samples, seed)
    return BracketPair(alpha, beta, lo, hi, exact)


def truncate(t, v, b: BracketPair):
    """Clamp ``v`` into [alpha(t), beta(t)]."""
    scalar = np.ndim(t) == 0 and np.ndim(v) == 0
    out = np.clip(v, b.alpha(t), b.beta(t))
    return float(out) if scalar else out


def deviation_envelope(d: DeviationSpec, t):
    """(tau_*(t), tau^*(t)), validated against the domain."""
    lo, hi = d.envelope(t)
    a, b = d.domain
    tol = 1e-9 * max(1.0, abs(a) + abs(b))
    if np.any(lo < a - tol) or np.any(hi > b + tol):
        raise ConfigError(f"deviation bounds leave the domain [{a}, {b}]")
    if np.any(lo > hi):
        raise ConfigError("deviation bounds have lo > hi")
    lo = np.clip(lo, a, b)
    hi = np.clip(hi, a, b)
    if np.ndim(t) == 0:
        return float(lo), float(hi)
    return lo, hi


def value_envelope(b: BracketPair, d: DeviationSpec, t):
    """E(t) = [min of alpha, max of beta] over [tau_*(t), tau^*(t)]."""
    scalar = np.ndim(t) == 0
    lo, hi = deviation_envelope(d, np.atleast_1d(np.asarray(t, dtype=float)))
    e_min = range_extrema(b.alpha, lo, hi, "min")
    e_max = range_extrema(b.beta, lo, hi, "max")
    if scalar:
        return float(e_min[0]), float(e_max[0])
    return e_min, e_max


@dataclass
class VerificationReport:
    """Per-node margins; an inequality holds exactly when its margin is >= 0."""

    definition: Literal["new", "classical"]
    node_t: np.ndarray
    lower_ode: np.ndarray
    upper_ode: np.ndarray
    boundary_t: np.ndarray
    lower_boundary: np.ndarray
    upper_boundary: np.ndarray
    tol: float
    empirical: bool = False
    error: str | None = None
    error_t: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def worst_lower_ode(self) -> float:
        return float(np.min(self.lower_ode)) if self.lower_ode.size else np.inf

    @property
    def worst_upper_ode(self) -> float:
        return float(np.min(self.upper_ode)) if self.upper_ode.size else np.inf

    @property
    def worst_lower(self) -> float:
        vals = np.concatenate([self.lower_ode, self.lower_boundary])
        return float(np.min(vals)) if vals.size else np.inf

    @property
    def worst_upper(self) -> float:
        vals = np.concatenate([self.upper_ode, self.upper_boundary])
        return float(np.min(vals)) if vals.size else np.inf

    @property
    def worst(self) -> float:
        return min(self.worst_lower, self.worst_upper)

    @property
    def verdict(self) -> Literal["pass", "fail", "indeterminate"]:
        if self.error is not None:
            return "indeterminate"
        return "pass" if self.worst >= -self.tol else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def marginal(self) -> bool:
        """Passed only thanks to the tolerance (some margin in [-tol, 0))."""
        return self.passed and self.worst < 0

    def label(self) -> str:
        parts = [self.verdict]
        if self.marginal:
            parts.append("marginal")
        if self.empirical:
            parts.append("empirical")
        return "/".join(parts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,kind,margin\n")
        for kind, ts, ms in (
            ("lower_ode", self.node_t, self.lower_ode),
            ("upper_ode", self.node_t, self.upper_ode),
            ("lower_boundary", self.boundary_t, self.lower_boundary),
            ("upper_boundary", self.boundary_t, self.upper_boundary),
        ):
            for t, m in zip(ts, ms):
                buf.write(f"{t:.17g},{kind},{m:.17g}\n")
        buf.write(
            f"# definition={self.definition} verdict={self.label()} "
            f"worst_lower={self.worst_lower:.17g} worst_upper={self.worst_upper:.17g} "
            f"tol={self.tol:.17g}"
        )
        if self.error is not None:
            buf.write(f" error={self.error!r}")
        buf.write("\n")
        return buf.getvalue()


def _check_grid(p: ProblemSpec, b: BracketPair) -> None:
    g = b.grid
    if (g.t0, g.r, g.L) != (p.t0, p.r, p.L):
        raise GridError("bracket grid does not match the problem's interval data")


def _failed(definition, b, tol, exc: DomainError, empirical=False) -> VerificationReport:
    empty = np.empty(0)
    return VerificationReport(
        definition, empty, empty, empty, empty, empty, empty, tol, empirical,
        error=str(exc), error_t=exc.where,
    )


def _boundary_margins(p: ProblemSpec, b: BracketPair, lo: float, hi: float):
    tm = b.grid.minus_nodes
    k = np.broadcast_to(np.asarray(p.history_k(tm), dtype=float), tm.shape)
    n = tm.size
    lower = lo + k - b.alpha.values[:n]
    upper = b.beta.values[:n] - hi - k
    return tm, lower, upper


def verify_new(
    p: ProblemSpec,
    b: BracketPair,
    quad_nodes: int = 64,
    tol: float = 1e-9,
    golden_iters: int = 40,
    envelope: Literal["declared", "whole"] = "declared",
) -> VerificationReport:
    """Check the envelope-based lower/upper inequalities.

    Differential inequalities are checked at the midpoints of the I_0 cells,
    where the piecewise-linear derivatives exist. The extremum of
    ``xi -> f(t, alpha(t), xi)`` over E(t) is found by a ``quad_nodes``-point
    scan refined by golden-section search. With ``envelope="whole"`` the
    deviation is assumed to reach anywhere in I.
    """
    _check_grid(p, b)
    dev = p.deviation.conservative() if envelope == "whole" else p.deviation
    grid = b.grid
    m = grid.plus_midpoints
    e_min, e_max = value_envelope(b, dev, m)
    am, bm = b.alpha(m), b.beta(m)
    mc = m[:, None]
    try:
        _, fmin = scan_min(lambda xi: p.f(mc, am[:, None], xi), e_min, e_max,
                           quad_nodes, golden_iters)
        _, fmax = scan_max(lambda xi: p.f(mc, bm[:, None], xi), e_min, e_max,
                           quad_nodes, golden_iters)
    except DomainError as exc:
        return _failed("new", b, tol, exc, not b.lambda_bounds_exact)
    tm, lb, ub = _boundary_margins(p, b, b.lambda_inf, b.lambda_sup)
    return VerificationReport(
        "new", m, fmin - b.alpha.plus_slopes, b.beta.plus_slopes - fmax,
        tm, lb, ub, tol, empirical=not b.lambda_bounds_exact,
    )


def verify_classical(p: ProblemSpec, b: BracketPair, tol: float = 1e-9) -> VerificationReport:
    """Check alpha' <= f(t, alpha, alpha(tau(t, alpha))) and the mirrored upper inequality."""
    _check_grid(p, b)
    m = b.grid.plus_midpoints
    try:
        fa = p.f(m, b.alpha(m), b.alpha(p.deviation(m, b.alpha)))
        fb = p.f(m, b.beta(m), b.beta(p.deviation(m, b.beta)))
    except DomainError as exc:
        return _failed("classical", b, tol, exc)
    tm, lb, ub = _boundary_margins(p, b, p.boundary(b.alpha), p.boundary(b.beta))
    return VerificationReport(
        "classical", m, fa - b.alpha.plus_slopes, b.beta.plus_slopes - fb, tm, lb, ub, tol,
    )


def verify(p: ProblemSpec, b: BracketPair, definition: str = "new", **kw) -> VerificationReport:
    if definition == "new":
        return verify_new(p, b, **kw)
    if definition == "classical":
        return verify_classical(p, b, tol=kw.get("tol", 1e-9))
    raise ValueError(f"unknown definition {definition!r}")
