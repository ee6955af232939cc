"""A small arithmetic expression language for right-hand sides and histories.

Grammar, loosest binding first::

    expr    := and_ ('or' and_)*
    and_    := cmp ('and' cmp)*
    cmp     := sum [('<' | '<=' | '>' | '>=' | '==') sum]
    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ['^' unary]            # right associative
    atom    := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

Variables are ``t``, ``x`` and ``y``; constants ``pi`` and ``e``. Evaluation
is vectorized over numpy arrays. Branches of ``if`` and the right operand of
``and``/``or`` are evaluated only where they are selected, so guarded
singularities such as ``if(y > 0, log(y), 0)`` never raise.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ExprSyntaxError, UnboundVariableError

__all__ = [
    "Num",
    "Var",
    "Const",
    "Unary",
    "Binary",
    "Call",
    "Expr",
    "parse_expr",
    "eval_expr",
    "evaluate",
    "to_string",
    "variables",
    "ExprFunction",
]

VARIABLES = ("t", "x", "y")
CONSTANTS = {"pi": math.pi, "e": math.e}
ARITY = {
    "sin": 1,
    "cos": 1,
    "tan": 1,
    "exp": 1,
    "log": 1,
    "abs": 1,
    "sign": 1,
    "sqrt": 1,
    "min": 2,
    "max": 2,
    "if": 3,
}
COMPARISONS = ("<", "<=", ">", ">=", "==")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Const, Unary, Binary, Call]


# --- tokenizer ------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|==|[-+*/^(),<>])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op", "name") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", self.tok.pos)

    def parse(self) -> Expr:
        node = self.or_()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def or_(self) -> Expr:
        node = self.and_()
        while self.accept("or"):
            node = Binary("or", node, self.and_())
        return node

    def and_(self) -> Expr:
        node = self.cmp()
        while self.accept("and"):
            node = Binary("and", node, self.cmp())
        return node

    def cmp(self) -> Expr:
        node = self.sum()
        if self.tok.kind == "op" and self.tok.text in COMPARISONS:
            op = self.advance().text
            node = Binary(op, node, self.sum())
            if self.tok.kind == "op" and self.tok.text in COMPARISONS:
                raise ExprSyntaxError("chained comparison", self.tok.pos)
        return node

    def sum(self) -> Expr:
        node = self.product()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.product())
        return node

    def product(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.accept("-"):
            return Unary("-", self.unary())
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        if self.accept("^"):
            node = Binary("^", node, self.unary())
        return node

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text in ARITY:
                self.expect("(")
                args = [self.or_()]
                while self.accept(","):
                    args.append(self.or_())
                self.expect(")")
                if len(args) != ARITY[tok.text]:
                    raise ExprSyntaxError(
                        f"{tok.text} takes {ARITY[tok.text]} argument(s), got {len(args)}",
                        tok.pos,
                    )
                return Call(tok.text, tuple(args))
            if tok.text in VARIABLES:
                return Var(tok.text)
            if tok.text in CONSTANTS:
                return Const(tok.text)
            raise ExprSyntaxError(f"unknown identifier {tok.text!r}", tok.pos)
        if self.accept("("):
            node = self.or_()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", tok.pos)


def parse_expr(text: str) -> Expr:
    """Parse ``text`` into an AST, raising :class:`ExprSyntaxError` on failure."""
    return _Parser(text).parse()


# --- printing -------------------------------------------------------------


def to_string(node: Expr) -> str:
    """Fully parenthesized text that parses back to the same AST."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Unary):
        return f"(-{to_string(node.operand)})"
    if isinstance(node, Binary):
        return f"({to_string(node.left)} {node.op} {to_string(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_string(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def variables(node: Expr) -> set[str]:
    """Names of the variables referenced anywhere in ``node``."""
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Unary):
        return variables(node.operand)
    if isinstance(node, Binary):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Call):
        out: set[str] = set()
        for a in node.args:
            out |= variables(a)
        return out
    return set()


# --- evaluation -----------------------------------------------------------


def _fail(message: str, env: dict, bad: np.ndarray):
    where = None
    if "t" in env and np.any(bad):
        where = float(np.asarray(env["t"])[np.argmax(bad)])
    raise DomainError(message, where)


def _checked(out: np.ndarray, what: str, env: dict) -> np.ndarray:
    bad = ~np.isfinite(out)
    if np.any(bad):
        _fail(f"non-finite result in {what}", env, bad)
    return out


def _subset(env: dict, mask: np.ndarray) -> dict:
    return {k: v[mask] for k, v in env.items()}


def _masked(node: Expr, env: dict, mask: np.ndarray, fill: float = 0.0) -> np.ndarray:
    out = np.full(mask.shape, fill)
    if np.any(mask):
        out[mask] = evaluate(node, _subset(env, mask), mask.sum())
    return out


def evaluate(node: Expr, env: dict, n: int) -> np.ndarray:
    """Evaluate ``node`` on arrays of length ``n`` bound in ``env``."""
    if isinstance(node, Num):
        return np.full(n, node.value)
    if isinstance(node, Const):
        return np.full(n, CONSTANTS[node.name])
    if isinstance(node, Var):
        if node.name not in env:
            raise UnboundVariableError(f"variable {node.name!r} is not bound here")
        return np.broadcast_to(env[node.name], (n,)).astype(float)
    if isinstance(node, Unary):
        return -evaluate(node.operand, env, n)
    if isinstance(node, Binary):
        return _binary(node, env, n)
    if isinstance(node, Call):
        return _call(node, env, n)
    raise TypeError(f"not an expression node: {node!r}")


def _binary(node: Binary, env: dict, n: int) -> np.ndarray:
    op = node.op
    left = evaluate(node.left, env, n)
    if op in ("and", "or"):
        lt = left != 0
        need = lt if op == "and" else ~lt
        right = _masked(node.right, env, need) != 0
        res = (lt & right) if op == "and" else (lt | right)
        return res.astype(float)
    right = evaluate(node.right, env, n)
    with np.errstate(all="ignore"):
        if op == "+":
            out = left + right
        elif op == "-":
            out = left - right
        elif op == "*":
            out = left * right
        elif op == "/":
            zero = right == 0
            if np.any(zero):
                _fail("division by zero", env, zero)
            out = left / right
        elif op == "^":
            bad = (left == 0) & (right < 0)
            if np.any(bad):
                _fail("zero to a negative power", env, bad)
            out = np.power(left, right)
        elif op == "<":
            return (left < right).astype(float)
        elif op == "<=":
            return (left <= right).astype(float)
        elif op == ">":
            return (left > right).astype(float)
        elif op == ">=":
            return (left >= right).astype(float)
        elif op == "==":
            return (left == right).astype(float)
        else:
            raise ValueError(f"unknown operator {op!r}")
    return _checked(out, repr(op), env)


_UNARY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "abs": np.abs,
    "sign": np.sign,
}


def _call(node: Call, env: dict, n: int) -> np.ndarray:
    name = node.name
    if name == "if":
        cond = evaluate(node.args[0], env, n) != 0
        out = np.empty(n)
        if np.any(cond):
            out[cond] = evaluate(node.args[1], _subset(env, cond), int(cond.sum()))
        if not np.all(cond):
            other = ~cond
            out[other] = evaluate(node.args[2], _subset(env, other), int(other.sum()))
        return out
    args = [evaluate(a, env, n) for a in node.args]
    with np.errstate(all="ignore"):
        if name == "log":
            bad = args[0] <= 0
            if np.any(bad):
                _fail("log of a nonpositive number", env, bad)
            out = np.log(args[0])
        elif name == "sqrt":
            bad = args[0] < 0
            if np.any(bad):
                _fail("square root of a negative number", env, bad)
            out = np.sqrt(args[0])
        elif name == "min":
            out = np.minimum(args[0], args[1])
        elif name == "max":
            out = np.maximum(args[0], args[1])
        else:
            out = _UNARY_FUNCS[name](args[0])
    return _checked(out, name, env)


def eval_expr(node: Expr, t: float, x: float | None = None, y: float | None = None) -> float:
    """Evaluate at a single point; ``x``/``y`` left as None are unbound."""
    env = {"t": np.array([float(t)])}
    if x is not None:
        env["x"] = np.array([float(x)])
    if y is not None:
        env["y"] = np.array([float(y)])
    return float(evaluate(node, env, 1)[0])


# --- scalar fast path ------------------------------------------------------

_SCALAR_UNARY = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "abs": abs,
    "sign": lambda v: float((v > 0) - (v < 0)),
}


def _finite(v: float, what: str, env: dict) -> float:
    if not math.isfinite(v):
        raise DomainError(f"non-finite result in {what}", env.get("t"))
    return v


def _compile_scalar(node: Expr):
    """Closure ``env -> float`` with the same semantics as :func:`evaluate`."""
    if isinstance(node, Num):
        v = float(node.value)
        return lambda env: v
    if isinstance(node, Const):
        v = CONSTANTS[node.name]
        return lambda env: v
    if isinstance(node, Var):
        name = node.name

        def var(env):
            try:
                return env[name]
            except KeyError:
                raise UnboundVariableError(f"variable {name!r} is not bound here") from None

        return var
    if isinstance(node, Unary):
        inner = _compile_scalar(node.operand)
        return lambda env: -inner(env)
    if isinstance(node, Binary):
        return _compile_binary(node)
    if isinstance(node, Call):
        return _compile_call(node)
    raise TypeError(f"not an expression node: {node!r}")


def _compile_binary(node: Binary):
    op = node.op
    lf, rf = _compile_scalar(node.left), _compile_scalar(node.right)
    if op == "and":
        return lambda env: float(lf(env) != 0 and rf(env) != 0)
    if op == "or":
        return lambda env: float(lf(env) != 0 or rf(env) != 0)
    if op == "+":
        return lambda env: _finite(lf(env) + rf(env), "'+'", env)
    if op == "-":
        return lambda env: _finite(lf(env) - rf(env), "'-'", env)
    if op == "*":
        return lambda env: _finite(lf(env) * rf(env), "'*'", env)
    if op == "/":
        def div(env):
            a, b = lf(env), rf(env)
            if b == 0:
                raise DomainError("division by zero", env.get("t"))
            return _finite(a / b, "'/'", env)

        return div
    if op == "^":
        def power(env):
            a, b = lf(env), rf(env)
            if a == 0 and b < 0:
                raise DomainError("zero to a negative power", env.get("t"))
            try:
                return _finite(float(a ** b) if a >= 0 or b == int(b) else math.nan,
                               "'^'", env)
            except OverflowError:
                raise DomainError("overflow in '^'", env.get("t")) from None

        return power
    cmp = {
        "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b,
        ">": lambda a, b: a > b,
        ">=": lambda a, b: a >= b,
        "==": lambda a, b: a == b,
    }[op]
    return lambda env: float(cmp(lf(env), rf(env)))


def _compile_call(node: Call):
    name = node.name
    args = [_compile_scalar(a) for a in node.args]
    if name == "if":
        c, a, b = args
        return lambda env: a(env) if c(env) != 0 else b(env)
    if name == "min":
        return lambda env: min(args[0](env), args[1](env))
    if name == "max":
        return lambda env: max(args[0](env), args[1](env))
    if name == "log":
        def log(env):
            v = args[0](env)
            if v <= 0:
                raise DomainError("log of a nonpositive number", env.get("t"))
            return math.log(v)

        return log
    if name == "sqrt":
        def sqrt(env):
            v = args[0](env)
            if v < 0:
                raise DomainError("square root of a negative number", env.get("t"))
            return math.sqrt(v)

        return sqrt
    fn = _SCALAR_UNARY[name]

    def unary(env):
        try:
            return _finite(fn(args[0](env)), name, env)
        except (OverflowError, ValueError):
            raise DomainError(f"overflow in {name}", env.get("t")) from None

    return unary


class ExprFunction:
    """A parsed expression used as a vectorized function of (t[, x[, y]]).

    Scalars in give a float out; arrays broadcast against each other.
    """

    def __init__(self, source: str | Expr, allowed: tuple[str, ...] = VARIABLES):
        self.expr = parse_expr(source) if isinstance(source, str) else source
        self.source = source if isinstance(source, str) else to_string(source)
        extra = variables(self.expr) - set(allowed)
        if extra:
            raise UnboundVariableError(
                f"expression {self.source!r} uses {sorted(extra)}; allowed here: {list(allowed)}"
            )
        self.allowed = allowed
        self._scalar = _compile_scalar(self.expr)

    def __call__(self, t, x=None, y=None):
        args = {"t": t, "x": x, "y": y}
        bound = {k: v for k, v in args.items() if v is not None}
        if all(isinstance(v, (float, int)) for v in bound.values()):
            return self._scalar({k: float(v) for k, v in bound.items()})
        scalar = all(np.ndim(v) == 0 for v in bound.values())
        arrays = np.broadcast_arrays(*[np.asarray(v, dtype=float) for v in bound.values()])
        shape = arrays[0].shape
        env = {k: a.ravel() for k, a in zip(bound, arrays)}
        out = evaluate(self.expr, env, int(np.prod(shape, dtype=int))).reshape(shape)
        return float(out) if scalar else out

    def __repr__(self):
        return f"ExprFunction({self.source!r})"
