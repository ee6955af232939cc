"""Automatic linear lower/upper solutions.

For ``x' = F(x(tau))`` with ``x = k`` on I_- (or, more generally, for ``f``
bounded below by ``F_alpha(y)`` when ``x <= min k`` and above by
``F_beta(y)`` when ``x >= max k``) the pair

    alpha = phi_*                  on I_-,   phi_* - m (t - t0)    on I_0,
    beta  = phi^*                  on I_-,   phi^* + m_bar (t - t0) on I_0,

is a lower/upper pair for *every* deviation, once the slopes are chosen from
a few thresholds of ``F``:

* ``y1 < min(0, phi_*)`` with ``0 > F(y) > (y - phi_*)/L`` for all ``y <= y1``;
* ``y2 > 0`` with ``F(y) > 0`` for all ``y >= y2``;
* ``lambda = min F`` on ``[y1, y2]``;
* ``y3 <= y1`` with ``F(y3) = lambda`` and ``F >= lambda`` on ``[y3, y1]``;
* ``m = (phi_* - y3)/L``, and the mirror image for the upper side.

The asymptotic hypotheses behind these thresholds can only be checked on a
finite search domain; a definite failure on the domain tail raises
:class:`HypothesesViolated`, a threshold that runs into the end of the
domain raises :class:`DomainExhausted`.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .bracket import BracketPair, make_bracket, verify_new
from .errors import (
    ConfigError,
    ConstructionUnsound,
    DomainExhausted,
    HypothesesViolated,
)
from .gridfun import GridFun, TimeGrid, make_grid
from .optimize import golden_min, scan_max, scan_min
from .problem import DeviationSpec, FunctionalSpec, ProblemSpec, RhsSpec

__all__ = [
    "ConstructionTrace",
    "EnvelopePair",
    "history_extrema",
    "find_thresholds",
    "construct_autonomous",
    "construct_enveloped",
    "construct_for_problem",
    "default_bracket",
]

DEFAULT_DOMAIN = (-1e6, 1e6)


@dataclass(frozen=True)
class EnvelopePair:
    """Lower envelope ``F_alpha`` and upper envelope ``F_beta`` of ``f`` in ``y``."""

    F_alpha: Callable
    F_beta: Callable


@dataclass(frozen=True)
class ConstructionTrace:
    phi_star: float
    phi_upper: float
    y1: float
    y2: float | None
    lambda_min: float
    y3: float
    y1_bar: float
    y2_bar: float | None
    lambda_max: float
    y3_bar: float
    m: float
    m_bar: float
    # the upper slope with the opposite sign convention, (phi^* - y3_bar)/L;
    # kept for reference, never used
    m_bar_opposite: float
    search_domain: tuple[float, float]

    def to_text(self) -> str:
        """``key = value`` block, one line per field."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ":".join(f"{u:.17g}" for u in v)
            elif v is None:
                v = "none"
            else:
                v = f"{v:.17g}"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


# --- history extrema ----------------------------------------------------------


def history_extrema(k: Callable, t0: float, r: float, samples: int = 2001) -> tuple[float, float]:
    """(min k, max k) over [t0 - r, t0]: uniform sample, then golden refinement."""
    if r < 0:
        raise ConfigError("r must be nonnegative")
    if r == 0:
        v = float(np.asarray(k(np.array([t0])), dtype=float)[0])
        return v, v
    if samples < 2:
        raise ConfigError("need at least two samples")

    def kk(t):
        return np.broadcast_to(np.asarray(k(t), dtype=float), np.shape(t))

    lo, hi = np.array([t0 - r]), np.array([float(t0)])
    _, vmin = scan_min(kk, lo, hi, samples, 60)
    _, vmax = scan_max(kk, lo, hi, samples, 60)
    return float(vmin[0]) + 0.0, float(vmax[0]) + 0.0


# --- threshold search -------------------------------------------------------

_LOWER_NAMES = {
    "to_inf": "F(y) -> -inf as y -> -inf",
    "ratio": "limsup F(y)/y < 1/L as y -> -inf",
    "other_inf": "F(y) -> +inf as y -> +inf",
    "bounded": "F_alpha bounded below on [0, +inf)",
}
_UPPER_NAMES = {
    "to_inf": "F(y) -> +inf as y -> +inf",
    "ratio": "limsup F(y)/y < 1/L as y -> +inf",
    "other_inf": "F(y) -> -inf as y -> -inf",
    "bounded": "F_beta bounded above on (-inf, 0]",
}


def _vec(F: Callable) -> Callable:
    def g(y):
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(F(y), dtype=float), y.shape)

    return g


def _offsets(span: float, n: int, scale: float) -> np.ndarray:
    """Increasing positive offsets up to ``span``: a linear band, then log spacing."""
    w = min(span, 10.0 * max(1.0, scale))
    band = np.linspace(w / n, w, n)
    if span <= w:
        return band
    tail = np.geomspace(w, span, n + 1)[1:]
    out = np.concatenate([band, tail])
    out[-1] = span
    return out


def _refined_min(F: Callable, pts: np.ndarray) -> float:
    """Min of F over sorted ``pts``, golden-refined around the best sample."""
    vals = F(pts)
    j = int(np.argmin(vals))
    best = float(vals[j])
    a, b = pts[max(j - 1, 0)], pts[min(j + 1, pts.size - 1)]
    if b > a:
        _, gv = golden_min(F, np.array([a]), np.array([b]), 60)
        best = min(best, float(gv[0]))
    return best


def _lower_side(F, phi, L, lo, hi, n, tol, envelope, names, side):
    """Thresholds (y1, y2, lambda, y3) for the lower side; see the module docstring."""
    c = min(0.0, phi)
    ys = c - _offsets(c - lo, n, abs(c))  # descending
    Fy = F(ys)
    if not np.all(np.isfinite(Fy)):
        raise HypothesesViolated(names["to_inf"], "F is not finite on the search domain")
    tail = ys <= c - (c - lo) / 10.0

    zs = _offsets(hi, n, 0.0)  # ascending, all > 0
    Fz = F(zs)
    ztail = zs >= hi / 10.0

    if envelope:
        head_min = float(np.min(np.concatenate([F(np.array([0.0])), Fz[~ztail]])))
        tail_min = float(np.min(Fz[ztail]))
        if not np.isfinite(tail_min) or tail_min < head_min - 1e-3 * (1.0 + abs(head_min)):
            raise HypothesesViolated(
                names["bounded"],
                f"min over the tail {tail_min:.6g} keeps falling below {head_min:.6g}",
            )

    if not (np.all(Fy[tail] < 0) and Fy[-1] < np.min(Fy[~tail])):
        raise HypothesesViolated(names["to_inf"], "F does not decrease to -inf on the domain tail")
    ratio = float(np.max(Fy[tail] / ys[tail]))
    if not ratio < 1.0 / L - tol:
        raise HypothesesViolated(names["ratio"], f"F(y)/y reaches {ratio:.6g} >= 1/L = {1.0 / L:.6g}")

    ok = (Fy < 0) & (Fy > (ys - phi) / L)
    bad = np.flatnonzero(~ok)
    if bad.size and bad[-1] == ys.size - 1:
        raise DomainExhausted(side, "no y1 inside the search domain")
    i1 = int(bad[-1]) + 1 if bad.size else 0
    y1 = float(ys[i1])

    pos = Fz > 0
    nonpos = np.flatnonzero(~pos)
    y2 = None
    if nonpos.size and nonpos[-1] == zs.size - 1:
        if not envelope:
            # still rising at the domain end: the threshold lies beyond it
            if not (np.all(np.diff(Fz[ztail]) >= 0) and Fz[-1] > np.max(Fz[~ztail])):
                raise HypothesesViolated(names["other_inf"], "F does not grow to +inf on the tail")
            raise DomainExhausted(side, "no y2 inside the search domain")
    else:
        y2 = float(zs[int(nonpos[-1]) + 1]) if nonpos.size else float(zs[0])

    top = y2 if y2 is not None else hi
    pts = np.concatenate([ys[: i1 + 1], np.linspace(y1, min(top, 0.0), n), [0.0], zs[zs <= top]])
    pts = np.unique(pts[(pts >= y1) & (pts <= top)])
    lam = _refined_min(F, pts)

    below = ys[i1:]
    Fb = Fy[i1:]
    hit = np.flatnonzero(Fb <= lam + tol)
    if hit.size == 0:
        raise DomainExhausted(side, "no y3 inside the search domain")
    j = int(hit[0])
    if j == 0 or Fb[j] >= lam:
        y3 = float(below[j])
    else:
        y3 = float(brentq(lambda y: float(F(np.array([y]))[0]) - lam, below[j], below[j - 1],
                          xtol=1e-14, rtol=4 * np.finfo(float).eps))
    return y1, y2, lam, y3


def find_thresholds(
    F: Callable,
    phi_star: float,
    phi_upper: float,
    L: float,
    domain: tuple[float, float] = DEFAULT_DOMAIN,
    grid: int = 2000,
    *,
    F_upper: Callable | None = None,
    envelope: bool = False,
    tol: float = 1e-9,
) -> ConstructionTrace:
    """Threshold search for both sides.

    ``F`` drives the lower side and ``F_upper`` (default ``F``) the upper
    side. With ``envelope=True`` the "grows to +inf" requirement on the far
    side is replaced by a boundedness check and ``y2`` may be absent.
    """
    lo, hi = map(float, domain)
    if not (lo < min(0.0, phi_star) and hi > max(0.0, phi_upper)):
        raise ConfigError(f"search domain {domain} must strictly contain min(0, phi_*) and max(0, phi^*)")
    if grid < 100:
        raise ConfigError("threshold search needs grid >= 100")
    if not L > 0:
        raise ConfigError("L must be positive")
    Fl = _vec(F)
    Fu = _vec(F_upper if F_upper is not None else F)

    y1, y2, lam, y3 = _lower_side(Fl, phi_star, L, lo, hi, grid, tol, envelope, _LOWER_NAMES, "lower")

    def G(u):
        return -Fu(-np.asarray(u, dtype=float))

    u1, u2, lam_u, u3 = _lower_side(G, -phi_upper, L, -hi, -lo, grid, tol, envelope,
                                    _UPPER_NAMES, "upper")
    y3_bar = -u3
    return ConstructionTrace(
        phi_star=float(phi_star),
        phi_upper=float(phi_upper),
        y1=y1, y2=y2, lambda_min=lam, y3=y3,
        y1_bar=-u1, y2_bar=None if u2 is None else -u2, lambda_max=-lam_u, y3_bar=y3_bar,
        m=(phi_star - y3) / L,
        m_bar=(y3_bar - phi_upper) / L,
        m_bar_opposite=(phi_upper - y3_bar) / L,
        search_domain=(lo, hi),
    )


# --- brackets -----------------------------------------------------------------


def _as_grid(grid, t0, r, L) -> TimeGrid:
    if isinstance(grid, TimeGrid):
        if (grid.t0, grid.r, grid.L) != (t0, r, L):
            raise ConfigError("grid does not match the interval data")
        return grid
    n = int(grid)
    n_minus = max(1, int(round(n * r / L))) if r > 0 else 0
    return make_grid(t0, r, L, n_minus, n)


def _linear_pair(trace: ConstructionTrace, grid: TimeGrid) -> tuple[GridFun, GridFun]:
    i0 = grid.i0
    tp = grid.plus_nodes - grid.t0
    a = np.full(grid.nodes.size, trace.phi_star)
    b = np.full(grid.nodes.size, trace.phi_upper)
    a[i0:] = trace.phi_star - trace.m * tp
    b[i0:] = trace.phi_upper + trace.m_bar * tp
    a[-1], b[-1] = trace.y3, trace.y3_bar
    return GridFun(grid, a), GridFun(grid, b)


def _whole_domain_problem(f: Callable | RhsSpec, k, t0, r, L) -> ProblemSpec:
    rhs = f if isinstance(f, RhsSpec) else RhsSpec(f)
    domain = (t0 - r, t0 + L)
    dev = DeviationSpec(lambda t, g: np.clip(t, *domain), domain, True, None, "any")
    return ProblemSpec(t0, r, L, rhs, dev, FunctionalSpec("constant", (0.0,)), k)


def _finish(trace, grid, prob, tol) -> tuple[BracketPair, ConstructionTrace]:
    alpha, beta = _linear_pair(trace, grid)
    pair = make_bracket(alpha, beta, prob.boundary)
    report = verify_new(prob, pair, tol=tol, envelope="whole")
    if not report.passed:
        raise ConstructionUnsound(report)
    return pair, trace


def construct_autonomous(
    F: Callable,
    k: Callable,
    interval: tuple[float, float, float],
    grid: TimeGrid | int = 1000,
    domain: tuple[float, float] = DEFAULT_DOMAIN,
    n_search: int = 2000,
    tol: float = 1e-9,
    problem: ProblemSpec | None = None,
) -> tuple[BracketPair, ConstructionTrace]:
    """Linear bracket for ``x' = F(x(tau))``, ``x = k`` on I_-, valid for any tau.

    ``interval`` is ``(t0, r, L)``. The result is verified against the
    whole-domain deviation envelope (against ``problem`` when given).
    """
    t0, r, L = map(float, interval)
    g = _as_grid(grid, t0, r, L)
    phi_star, phi_upper = history_extrema(k, t0, r)
    trace = find_thresholds(F, phi_star, phi_upper, L, domain, n_search, tol=tol)
    Fv = _vec(F)
    prob = problem or _whole_domain_problem(lambda t, x, y: Fv(np.broadcast_arrays(t, x, y)[2]),
                                            k, t0, r, L)
    return _finish(trace, g, prob, tol)


def _check_domination(env: EnvelopePair, f: Callable, t0, L, phi_star, phi_upper,
                      samples: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    t = rng.uniform(t0, t0 + L, samples)
    y = rng.choice([-1.0, 1.0], samples) * 10.0 ** rng.uniform(-2, 3, samples)
    dx = 10.0 ** rng.uniform(-2, 3, samples) * rng.uniform(0, 1, samples)
    lower = np.asarray(f(t, phi_star - dx, y), dtype=float)
    bad = lower < _vec(env.F_alpha)(y) - 1e-9
    if np.any(bad):
        i = int(np.argmax(bad))
        raise HypothesesViolated(
            "f(t, x, y) >= F_alpha(y) for x <= phi_*",
            f"fails at t={t[i]:.6g}, x={phi_star - dx[i]:.6g}, y={y[i]:.6g}",
        )
    upper = np.asarray(f(t, phi_upper + dx, y), dtype=float)
    bad = upper > _vec(env.F_beta)(y) + 1e-9
    if np.any(bad):
        i = int(np.argmax(bad))
        raise HypothesesViolated(
            "f(t, x, y) <= F_beta(y) for x >= phi^*",
            f"fails at t={t[i]:.6g}, x={phi_upper + dx[i]:.6g}, y={y[i]:.6g}",
        )


def construct_enveloped(
    env: EnvelopePair,
    f: Callable | RhsSpec,
    k: Callable,
    interval: tuple[float, float, float],
    grid: TimeGrid | int = 1000,
    domain: tuple[float, float] = DEFAULT_DOMAIN,
    n_search: int = 2000,
    tol: float = 1e-9,
    samples: int = 1000,
    seed: int = 0,
    problem: ProblemSpec | None = None,
) -> tuple[BracketPair, ConstructionTrace]:
    """Linear bracket for a general ``f`` dominated by the envelopes in ``env``.

    Domination is spot-checked on ``samples`` random points first; the
    thresholds come from ``F_alpha`` (lower side) and ``F_beta`` (upper
    side); the pair is verified against ``f`` itself.
    """
    t0, r, L = map(float, interval)
    g = _as_grid(grid, t0, r, L)
    phi_star, phi_upper = history_extrema(k, t0, r)
    fn = f.f if isinstance(f, RhsSpec) else f
    _check_domination(env, fn, t0, L, phi_star, phi_upper, samples, seed)
    trace = find_thresholds(env.F_alpha, phi_star, phi_upper, L, domain, n_search,
                            F_upper=env.F_beta, envelope=True, tol=tol)
    prob = problem or _whole_domain_problem(f, k, t0, r, L)
    return _finish(trace, g, prob, tol)


def construct_for_problem(
    p: ProblemSpec, grid: TimeGrid | int = 1000, domain=DEFAULT_DOMAIN, **kw
) -> tuple[BracketPair, ConstructionTrace]:
    """Build the linear bracket a problem's construction hint asks for."""
    hint = p.construction
    if hint is None:
        raise ConfigError(f"problem {p.name} has no automatic bracket construction")
    if not (p.boundary.is_constant and p.boundary.params[0] == 0.0):
        raise ConfigError("automatic brackets need the start condition x = k on I_-")
    interval = (p.t0, p.r, p.L)
    if hint.kind == "autonomous":
        return construct_autonomous(hint.F_alpha, p.history_k, interval, grid, domain,
                                    problem=p, **kw)
    env = EnvelopePair(hint.F_alpha, hint.F_beta)
    return construct_enveloped(env, p.rhs, p.history_k, interval, grid, domain,
                               problem=p, **kw)


def default_bracket(p: ProblemSpec, grid: TimeGrid | int = 1000) -> BracketPair:
    """The problem's own bracket: sampled alpha/beta, or constructed when "auto"."""
    if p.alpha == "auto" or p.beta == "auto":
        return construct_for_problem(p, grid)[0]
    if p.alpha is None or p.beta is None:
        raise ConfigError(f"problem {p.name} has no default bracket; pass alpha and beta")
    g = _as_grid(grid, p.t0, p.r, p.L)
    alpha = GridFun.from_callable(g, p.alpha)
    beta = GridFun.from_callable(g, p.beta)
    return make_bracket(alpha, beta, p.boundary)
