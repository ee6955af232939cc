"""Data model for first-order problems with deviated arguments.

A problem is

    x'(t) = f(t, x(t), x(tau(t, x)))   for t in I_0 = [t0, t0 + L],
    x(t)  = Lambda(x) + k(t)           for t in I_- = [t0 - r, t0],

where ``tau`` maps into I = I_- U I_0 and may read the whole state, and
``Lambda`` is a real functional on continuous functions over I.

All evaluators are vectorized: ``f(t, x, y)`` takes broadcastable arrays,
``tau(t, gamma)`` takes an array of times and a :class:`GridFun`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np

from .errors import ConfigError, DevargError, ExprSyntaxError, UnboundVariableError
from .expr import ExprFunction, parse_expr, evaluate
from .gridfun import GridFun, TimeGrid, extremum_on, integrate, make_grid

__all__ = [
    "RhsSpec",
    "DeviationSpec",
    "FunctionalSpec",
    "ConstructionHint",
    "ProblemSpec",
    "load_problem",
    "load_problem_file",
    "parse_config",
    "pure_delay",
    "reflection",
    "deviation_from_expr",
    "weighted_eval",
    "parse_functional",
]

Monotonicity = Literal["nondecreasing", "nonincreasing", "unknown"]


@dataclass(frozen=True)
class RhsSpec:
    """Right-hand side ``f(t, x, y)``; ``y`` is the deviated state."""

    f: Callable
    monotone_in_y: Monotonicity = "unknown"
    l1_bound: Callable | None = None
    source: str = "<native>"

    def __post_init__(self):
        if self.monotone_in_y not in ("nondecreasing", "nonincreasing", "unknown"):
            raise ConfigError(f"bad monotonicity flag {self.monotone_in_y!r}")

    def __call__(self, t, x, y):
        return self.f(t, x, y)


@dataclass(frozen=True)
class DeviationSpec:
    """Deviating argument ``tau(t, gamma)`` with optional declared envelope.

    ``bounds(t) -> (lo, hi)`` gives tau_*(t) and tau^*(t). When absent, a
    state-independent deviation is its own envelope and a state-dependent one
    falls back to the whole domain ``[t0 - r, t0 + L]``.
    """

    tau: Callable
    domain: tuple[float, float]
    state_dependent: bool = False
    bounds: Callable | None = None
    kind: str = "native"
    delay: float | None = None

    def __call__(self, t, gamma: GridFun | None = None):
        if gamma is None and self.state_dependent:
            raise DevargError("state-dependent deviation needs the current state")
        return np.asarray(self.tau(np.asarray(t, dtype=float), gamma), dtype=float)

    def envelope(self, t) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        if self.bounds is not None:
            lo, hi = self.bounds(t)
            return (np.broadcast_to(np.asarray(lo, dtype=float), t.shape),
                    np.broadcast_to(np.asarray(hi, dtype=float), t.shape))
        if not self.state_dependent:
            v = self(t)
            return v, v
        return np.full(t.shape, self.domain[0]), np.full(t.shape, self.domain[1])

    def conservative(self) -> "DeviationSpec":
        """Same deviation, but with the whole domain declared as its envelope."""
        a, b = self.domain
        return replace(
            self,
            state_dependent=True,
            bounds=lambda t: (np.full(np.shape(t), a), np.full(np.shape(t), b)),
            kind=self.kind + "+whole",
        )


def pure_delay(delay: float, domain: tuple[float, float]) -> DeviationSpec:
    delay = float(delay)
    return DeviationSpec(lambda t, g: t - delay, domain, False, None, f"delay:{delay!r}", delay)


def reflection(domain: tuple[float, float]) -> DeviationSpec:
    return DeviationSpec(lambda t, g: -t, domain, False, None, "reflection")


def deviation_from_expr(text: str, domain) -> DeviationSpec:
    fn = ExprFunction(text, allowed=("t",))
    return DeviationSpec(lambda t, g: fn(t), domain, False, None, f"expr:{text}")


def weighted_eval(text: str, domain) -> DeviationSpec:
    """tau(t, gamma) = clamp(expr(t, gamma(t))) into the domain; ``x`` names gamma(t)."""
    fn = ExprFunction(text, allowed=("t", "x"))
    a, b = domain

    def tau(t, gamma):
        return np.clip(fn(t, gamma(t)), a, b)

    return DeviationSpec(tau, domain, True, None, f"weighted_eval:{text}")


FunctionalKind = Literal["constant", "eval_at", "mean", "sup_on", "inf_on", "native"]


@dataclass(frozen=True)
class FunctionalSpec:
    """Boundary functional Lambda. Every kind except ``native`` is nondecreasing."""

    kind: FunctionalKind
    params: tuple = ()
    native: Callable | None = None
    native_monotone: bool = False

    def __post_init__(self):
        need = {"constant": 1, "eval_at": 1, "mean": 0, "sup_on": 2, "inf_on": 2, "native": 0}
        if self.kind not in need:
            raise ConfigError(f"unknown functional kind {self.kind!r}")
        if len(self.params) != need[self.kind]:
            raise ConfigError(f"functional {self.kind} takes {need[self.kind]} parameter(s)")
        if self.kind == "native" and self.native is None:
            raise ConfigError("native functional needs a callable")
        if self.kind in ("sup_on", "inf_on") and self.params[0] > self.params[1]:
            raise ConfigError(f"empty interval in functional {self.kind}{self.params}")

    @property
    def monotone(self) -> bool:
        return self.kind != "native" or self.native_monotone

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def __call__(self, gamma: GridFun) -> float:
        k = self.kind
        if k == "constant":
            return float(self.params[0])
        if k == "eval_at":
            return float(gamma(self.params[0]))
        if k == "mean":
            g = gamma.grid
            return integrate(gamma, g.start, g.end) / (g.end - g.start)
        if k == "sup_on":
            return extremum_on(gamma, self.params[0], self.params[1], "max")
        if k == "inf_on":
            return extremum_on(gamma, self.params[0], self.params[1], "min")
        return float(self.native(gamma))

    def describe(self) -> str:
        if self.kind == "native":
            return "native"
        return ":".join([self.kind, *(repr(float(p)) for p in self.params)])


def parse_functional(text: str) -> FunctionalSpec:
    """``constant:c``, ``eval_at:a``, ``mean``, ``sup:a:b`` or ``inf:a:b``."""
    parts = [p.strip() for p in text.split(":")]
    head, args = parts[0], parts[1:]
    names = {"constant": "constant", "eval_at": "eval_at", "mean": "mean",
             "sup": "sup_on", "sup_on": "sup_on", "inf": "inf_on", "inf_on": "inf_on"}
    if head not in names:
        raise ConfigError(f"unknown lambda kind {head!r}")
    return FunctionalSpec(names[head], tuple(_number(a, "lambda") for a in args))


@dataclass(frozen=True)
class ConstructionHint:
    """How to build a linear bracket for this problem automatically.

    ``autonomous``: the right-hand side is ``F(y)`` alone and the start
    condition is ``x = k`` on I_-. ``envelope``: ``F_alpha``/``F_beta`` bound
    ``f`` from below (for ``x <= min k``) and from above (for ``x >= max k``).
    """

    kind: Literal["autonomous", "envelope"]
    F_alpha: Callable
    F_beta: Callable


@dataclass(frozen=True)
class ProblemSpec:
    t0: float
    r: float
    L: float
    rhs: RhsSpec
    deviation: DeviationSpec
    boundary: FunctionalSpec
    history_k: Callable
    name: str = "custom"
    alpha: Callable | str | None = None
    beta: Callable | str | None = None
    construction: ConstructionHint | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.L > 0:
            raise ConfigError(f"L must be positive, got {self.L}")
        if not self.r >= 0:
            raise ConfigError(f"r must be nonnegative, got {self.r}")

    @property
    def domain(self) -> tuple[float, float]:
        return (self.t0 - self.r, self.t0 + self.L)

    def grid(self, n_plus: int, n_minus: int | None = None) -> TimeGrid:
        """Uniform grid with ``n_plus`` cells on I_0 and matching spacing on I_-."""
        if n_minus is None:
            n_minus = max(1, int(round(n_plus * self.r / self.L))) if self.r > 0 else 0
        return make_grid(self.t0, self.r, self.L, n_minus, n_plus)

    def k(self, t):
        return self.history_k(t)

    def f(self, t, x, y):
        return self.rhs.f(t, x, y)


# --- config files -----------------------------------------------------------

KNOWN_KEYS = {
    "t0", "r", "L", "f", "f_monotone", "tau", "tau_lo", "tau_hi", "lambda", "k",
    "alpha", "beta", "builtin", "gamma", "g",
}


def _number(text: str, key: str) -> float:
    try:
        node = parse_expr(text)
        return float(evaluate(node, {}, 1)[0])
    except (ExprSyntaxError, UnboundVariableError) as exc:
        raise ConfigError(f"{key}: expected a number, got {text!r} ({exc})") from exc


def parse_config(text: str) -> dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment.

    A ``builtin = name, key = value, ...`` line may carry parameters inline.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "builtin" and "," in value:
            name, *rest = (s.strip() for s in value.split(","))
            value = name
            for item in rest:
                if "=" not in item:
                    raise ConfigError(f"line {lineno}: bad builtin parameter {item!r}")
                k2, v2 = (s.strip() for s in item.split("=", 1))
                _store(out, k2, v2, lineno)
        _store(out, key, value, lineno)
    return out


def _store(out: dict, key: str, value: str, lineno: int) -> None:
    if key not in KNOWN_KEYS:
        raise ConfigError(f"line {lineno}: unknown key {key!r}")
    out[key] = value


def _expr_fn(text: str, key: str, allowed: tuple[str, ...]) -> ExprFunction:
    try:
        return ExprFunction(text, allowed=allowed)
    except (ExprSyntaxError, UnboundVariableError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def load_problem(config: str) -> ProblemSpec:
    """Build a validated :class:`ProblemSpec` from config text."""
    from .registry import builtin_problem

    cfg = parse_config(config)
    if "builtin" in cfg:
        params = {k: v for k, v in cfg.items() if k != "builtin"}
        return builtin_problem(cfg["builtin"], **params)
    for key in ("f", "L", "tau"):
        if key not in cfg:
            raise ConfigError(f"missing field {key}")
    t0 = _number(cfg.get("t0", "0"), "t0")
    r = _number(cfg.get("r", "0"), "r")
    L = _number(cfg["L"], "L")
    if not L > 0 or not r >= 0:
        raise ConfigError("need L > 0 and r >= 0")
    domain = (t0 - r, t0 + L)

    f_fn = _expr_fn(cfg["f"], "f", ("t", "x", "y"))
    rhs = RhsSpec(lambda t, x, y: f_fn(t, x, y), cfg.get("f_monotone", "unknown"),
                  source=cfg["f"])
    deviation = _parse_tau(cfg, domain)
    boundary = parse_functional(cfg.get("lambda", "constant:0"))
    k_fn = _expr_fn(cfg.get("k", "0"), "k", ("t",))

    alpha = _bracket_hint(cfg.get("alpha"), "alpha")
    beta = _bracket_hint(cfg.get("beta"), "beta")
    construction = None
    if "auto" in (alpha, beta):
        if not ({"t", "x"} & _vars(f_fn)) and boundary.is_constant and boundary.params[0] == 0:
            F = lambda y: f_fn(0.0, 0.0, y)  # noqa: E731
            construction = ConstructionHint("autonomous", F, F)
        else:
            raise ConfigError(
                "alpha/beta = auto needs f to depend on y only and lambda = constant:0"
            )
    prob = ProblemSpec(t0, r, L, rhs, deviation, boundary, k_fn, "config",
                       alpha, beta, construction)
    validate_problem(prob)
    return prob


def _vars(fn: ExprFunction) -> set[str]:
    from .expr import variables

    return variables(fn.expr)


def _bracket_hint(text: str | None, key: str):
    if text is None:
        return None
    if text.strip() == "auto":
        return "auto"
    return _expr_fn(text, key, ("t",))


def _parse_tau(cfg: dict, domain) -> DeviationSpec:
    text = cfg["tau"].strip()
    if text == "reflection":
        dev = reflection(domain)
    elif text.startswith("delay"):
        _, _, arg = text.partition(":")
        if not arg:
            raise ConfigError("tau = delay needs a length, e.g. delay:1")
        dev = pure_delay(_number(arg, "tau"), domain)
    elif text.startswith("weighted_eval:"):
        try:
            dev = weighted_eval(text.split(":", 1)[1], domain)
        except (ExprSyntaxError, UnboundVariableError) as exc:
            raise ConfigError(f"tau: {exc}") from exc
    else:
        try:
            dev = deviation_from_expr(text, domain)
        except (ExprSyntaxError, UnboundVariableError) as exc:
            raise ConfigError(f"tau: {exc}") from exc
    if "tau_lo" in cfg or "tau_hi" in cfg:
        lo_fn = _expr_fn(cfg.get("tau_lo", repr(domain[0])), "tau_lo", ("t",))
        hi_fn = _expr_fn(cfg.get("tau_hi", repr(domain[1])), "tau_hi", ("t",))
        dev = replace(dev, bounds=lambda t: (lo_fn(t), hi_fn(t)))
    return dev


def validate_problem(p: ProblemSpec, samples: int = 257, seed: int = 0) -> None:
    """Check that k is finite on I_- and tau stays inside I and its envelope."""
    a, b = p.domain
    if p.r > 0:
        tk = np.linspace(a, p.t0, samples)
    else:
        tk = np.array([p.t0])
    try:
        kv = np.asarray(p.history_k(tk), dtype=float)
    except DevargError as exc:
        raise ConfigError(f"k cannot be evaluated on I_-: {exc}") from exc
    if not np.all(np.isfinite(kv)):
        raise ConfigError("k is not finite on I_-")

    grid = p.grid(32)
    rng = np.random.default_rng(seed)
    probes = [GridFun.constant(grid, 0.0),
              GridFun(grid, rng.normal(size=grid.nodes.size))]
    t = np.linspace(p.t0, p.t0 + p.L, samples)
    tol = grid.snap_tol
    for gamma in probes:
        tau = p.deviation(t, gamma if p.deviation.state_dependent else None)
        if np.any(tau < a - tol) or np.any(tau > b + tol):
            bad = t[(tau < a - tol) | (tau > b + tol)][0]
            raise ConfigError(f"tau leaves I = [{a}, {b}] at t = {bad!r}")
        lo, hi = p.deviation.envelope(t)
        if np.any(lo > hi) or np.any(tau < lo - tol) or np.any(tau > hi + tol):
            raise ConfigError("tau violates its declared bounds tau_lo <= tau <= tau_hi")


def load_problem_file(path) -> ProblemSpec:
    with open(path) as fh:
        return load_problem(fh.read())
