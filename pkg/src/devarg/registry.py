"""Named example problems.

``example3_4`` applies the envelope function to the deviated *state*
``x(tau(t, x))``, not to the deviated time ``tau(t, x)``: the envelope
inequalities it is paired with bound f in terms of the state.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .expr import ExprFunction
from .problem import (
    ConstructionHint,
    DeviationSpec,
    FunctionalSpec,
    ProblemSpec,
    RhsSpec,
    _expr_fn,
    _number,
    deviation_from_expr,
    pure_delay,
    reflection,
    validate_problem,
    weighted_eval,
)

__all__ = ["builtin_problem", "BUILTINS", "log_sine"]


def log_sine(y):
    """sgn(y) log|y| outside [-1, 1], sin(pi y) inside. Continuous, odd."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    out = np.where(a > 1, np.sign(y) * np.log(np.maximum(a, 1.0)), np.sin(np.pi * y))
    return float(out) if out.ndim == 0 else out


def _constant(v: float):
    return lambda t: np.full(np.shape(t), v) if np.ndim(t) else v


def _example2_4() -> ProblemSpec:
    f = ExprFunction("-y")
    return ProblemSpec(
        t0=0.0, r=1.0, L=1.0,
        rhs=RhsSpec(f, "nonincreasing", _constant(1.0), source="-y"),
        deviation=pure_delay(1.0, (-1.0, 1.0)),
        boundary=FunctionalSpec("constant", (0.0,)),
        history_k=ExprFunction("-t", allowed=("t",)),
        name="example2_4",
    )


EXAMPLE2_6_F = "if(y < -1, 1, if(y <= 1, -y, -1))"


def _example2_6() -> ProblemSpec:
    t0, L = -math.pi / 2, 1.5 * math.pi
    return ProblemSpec(
        t0=t0, r=0.0, L=L,
        rhs=RhsSpec(ExprFunction(EXAMPLE2_6_F), "nonincreasing", _constant(1.0),
                    source=EXAMPLE2_6_F),
        deviation=deviation_from_expr("pi/2 - t", (t0, t0 + L)),
        boundary=FunctionalSpec("constant", (0.0,)),
        history_k=_constant(0.0),
        name="example2_6",
        alpha=ExprFunction("-t - pi/2", allowed=("t",)),
        beta=ExprFunction("t + pi/2", allowed=("t",)),
    )


def _example2_8(L: float = 1.0) -> ProblemSpec:
    return ProblemSpec(
        t0=0.0, r=L, L=L,
        rhs=RhsSpec(ExprFunction("-t/y"), "nondecreasing", _constant(0.5), source="-t/y"),
        deviation=reflection((-L, L)),
        boundary=FunctionalSpec("constant", (0.0,)),
        history_k=ExprFunction("t*cos(t) - 3*t", allowed=("t",)),
        name="example2_8",
        alpha=ExprFunction("if(t < 0, -2*t, -t/2)", allowed=("t",)),
        beta=ExprFunction("if(t < 0, -4*t, 0)", allowed=("t",)),
        params={"L": L},
    )


def _example3_2(L: float = 1.0, k: str = "0", r: float = 1.0) -> ProblemSpec:
    if not r > 0:
        raise ConfigError("example3_2 needs r > 0")
    domain = (-r, L)
    # state-dependent, lands in [-r, t]: tau = -r + (t + r)(1 + sin x(t))/2
    dev = weighted_eval(f"-({r!r}) + (t + {r!r})*(1 + sin(x))/2", domain)
    dev = DeviationSpec(dev.tau, domain, True, lambda t: (np.full(np.shape(t), -r), t),
                        dev.kind)
    return ProblemSpec(
        t0=0.0, r=r, L=L,
        rhs=RhsSpec(lambda t, x, y: log_sine(np.broadcast_arrays(t, x, y)[2]), "unknown",
                    source="log_sine(y)"),
        deviation=dev,
        boundary=FunctionalSpec("constant", (0.0,)),
        history_k=_expr_fn(k, "k", ("t",)),
        name="example3_2",
        alpha="auto",
        beta="auto",
        construction=ConstructionHint("autonomous", log_sine, log_sine),
        params={"L": L, "k": k, "r": r},
    )


def _example3_4(gamma: float = 1.0, L: float = 1.0, g: str = "1") -> ProblemSpec:
    if gamma < 0:
        raise ConfigError("example3_4 needs gamma >= 0")
    g_fn = _expr_fn(g, "g", ("t", "x"))
    rng = np.random.default_rng(0)
    ts = rng.uniform(0, L, 1000)
    xs = rng.uniform(-50, 50, 1000)
    if np.any(np.asarray(g_fn(ts, xs)) < 0):
        raise ConfigError("example3_4 needs g >= 0")
    r = math.pi
    domain = (-r, L)

    def f(t, x, y):
        t, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y)))
        s = x + math.pi
        return -s * np.abs(s) ** gamma * g_fn(t, x) + log_sine(y)

    dev = weighted_eval("t - pi/(1 + x^2)", domain)
    dev = DeviationSpec(dev.tau, domain, True, lambda t: (t - math.pi, t), dev.kind)
    return ProblemSpec(
        t0=0.0, r=r, L=L,
        rhs=RhsSpec(f, "unknown", source=f"-(x+pi)|x+pi|^{gamma!r} g(t,x) + log_sine(y)"),
        deviation=dev,
        boundary=FunctionalSpec("constant", (0.0,)),
        history_k=ExprFunction("-t*cos(t)", allowed=("t",)),
        name="example3_4",
        alpha="auto",
        beta="auto",
        construction=ConstructionHint("envelope", log_sine, log_sine),
        params={"gamma": gamma, "L": L, "g": g},
    )


BUILTINS = {
    "example2_4": (_example2_4, {}),
    "example2_6": (_example2_6, {}),
    "example2_8": (_example2_8, {"L": "num"}),
    "example3_2": (_example3_2, {"L": "num", "k": "expr", "r": "num"}),
    "example3_4": (_example3_4, {"gamma": "num", "L": "num", "g": "expr"}),
}


def builtin_problem(name: str, **params) -> ProblemSpec:
    """Instantiate a registry problem; string parameters are parsed here."""
    if name not in BUILTINS:
        raise ConfigError(f"unknown builtin {name!r}; known: {', '.join(sorted(BUILTINS))}")
    factory, accepted = BUILTINS[name]
    kwargs = {}
    for key, value in params.items():
        if key not in accepted:
            raise ConfigError(f"builtin {name} does not take parameter {key!r}")
        if accepted[key] == "num" and isinstance(value, str):
            value = _number(value, key)
        kwargs[key] = value
    prob = factory(**kwargs)
    validate_problem(prob)
    return prob
