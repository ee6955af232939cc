"""Continuous piecewise-linear functions on I = [t0 - r, t0] U [t0, t0 + L].

Everything the solvers manipulate (solutions, iterates, brackets, history
data) is a :class:`GridFun`: node values on a :class:`TimeGrid`, linearly
interpolated in between. Extrema and integrals over subintervals are exact
for this representation.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import GridError

__all__ = [
    "TimeGrid",
    "GridFun",
    "make_grid",
    "extremum_on",
    "integrate",
    "range_extrema",
    "write_csv",
    "read_csv",
    "format_csv",
]


def _frozen(a: ArrayLike) -> NDArray[np.float64]:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing nodes covering ``[t0 - r, t0 + L]`` with ``t0`` as a node."""

    t0: float
    r: float
    L: float
    nodes: NDArray[np.float64]

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if not self.L > 0:
            raise GridError(f"forward length L must be positive, got {self.L}")
        if not self.r >= 0:
            raise GridError(f"history length r must be nonnegative, got {self.r}")
        if nodes.ndim != 1 or nodes.size < 2:
            raise GridError("a grid needs at least two nodes")
        if not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0):
            raise GridError("grid nodes must be finite and strictly increasing")
        if nodes[0] != self.t0 - self.r or nodes[-1] != self.t0 + self.L:
            raise GridError("grid must start at t0 - r and end at t0 + L")
        hits = np.flatnonzero(nodes == self.t0)
        if hits.size != 1:
            raise GridError("t0 must appear exactly once among the nodes")
        object.__setattr__(self, "_i0", int(hits[0]))

    @property
    def i0(self) -> int:
        """Index of the node ``t0``."""
        return self._i0

    @property
    def start(self) -> float:
        return float(self.nodes[0])

    @property
    def end(self) -> float:
        return float(self.nodes[-1])

    @property
    def snap_tol(self) -> float:
        return 1e-9 * max(1.0, abs(self.t0) + self.r + self.L)

    @property
    def minus_nodes(self) -> NDArray[np.float64]:
        """Nodes of I_- (always contains ``t0``)."""
        return self.nodes[: self.i0 + 1]

    @property
    def plus_nodes(self) -> NDArray[np.float64]:
        """Nodes of I_0 (starts at ``t0``)."""
        return self.nodes[self.i0 :]

    @property
    def plus_midpoints(self) -> NDArray[np.float64]:
        p = self.plus_nodes
        return 0.5 * (p[:-1] + p[1:])

    @property
    def plus_widths(self) -> NDArray[np.float64]:
        return np.diff(self.plus_nodes)

    @property
    def n_plus(self) -> int:
        return self.nodes.size - 1 - self.i0

    @property
    def n_minus(self) -> int:
        return self.i0

    def same_as(self, other: "TimeGrid") -> bool:
        return self is other or (
            self.t0 == other.t0
            and self.r == other.r
            and self.L == other.L
            and self.nodes.shape == other.nodes.shape
            and bool(np.all(self.nodes == other.nodes))
        )

    def snap(self, t: ArrayLike) -> NDArray[np.float64]:
        """Clip ``t`` into the domain, rejecting points beyond the snap tolerance."""
        t = np.asarray(t, dtype=float)
        tol = self.snap_tol
        if np.any(~np.isfinite(t)) or np.any(t < self.start - tol) or np.any(t > self.end + tol):
            bad = t[(~np.isfinite(t)) | (t < self.start - tol) | (t > self.end + tol)]
            raise GridError(
                f"time {float(np.ravel(bad)[0])!r} outside [{self.start!r}, {self.end!r}]"
            )
        return np.clip(t, self.start, self.end)


def make_grid(t0: float, r: float, L: float, n_minus: int, n_plus: int) -> TimeGrid:
    """Uniform nodes on I_- (``n_minus`` cells) and on I_0 (``n_plus`` cells).

    With ``r == 0`` the history interval collapses to ``{t0}`` and
    ``n_minus`` is ignored.
    """
    t0, r, L = float(t0), float(r), float(L)
    if not L > 0:
        raise GridError(f"forward length L must be positive, got {L}")
    if not r >= 0:
        raise GridError(f"history length r must be nonnegative, got {r}")
    if n_plus < 1:
        raise GridError("n_plus must be at least 1")
    plus = np.linspace(t0, t0 + L, int(n_plus) + 1)
    plus[0], plus[-1] = t0, t0 + L
    if r == 0:
        return TimeGrid(t0, r, L, plus)
    if n_minus < 1:
        raise GridError("n_minus must be at least 1 when r > 0")
    minus = np.linspace(t0 - r, t0, int(n_minus) + 1)
    minus[0] = t0 - r
    return TimeGrid(t0, r, L, np.concatenate([minus[:-1], plus]))


@dataclass(frozen=True, eq=False)
class GridFun:
    """Node values on a :class:`TimeGrid`, read as a piecewise-linear function."""

    grid: TimeGrid
    values: NDArray[np.float64]

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != self.grid.nodes.shape:
            raise GridError(
                f"expected {self.grid.nodes.size} values, got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise GridError("GridFun values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: TimeGrid, fn: Callable[[NDArray], ArrayLike]) -> "GridFun":
        """Sample a vectorized function of time at the grid nodes."""
        vals = np.broadcast_to(np.asarray(fn(grid.nodes), dtype=float), grid.nodes.shape)
        return cls(grid, vals)

    @classmethod
    def constant(cls, grid: TimeGrid, c: float) -> "GridFun":
        return cls(grid, np.full(grid.nodes.shape, float(c)))

    def with_values(self, values: ArrayLike) -> "GridFun":
        return GridFun(self.grid, values)

    def __call__(self, t):
        """Evaluate by linear interpolation; scalars in, scalars out."""
        scalar = np.ndim(t) == 0
        tt = self.grid.snap(t)
        out = np.interp(tt, self.grid.nodes, self.values)
        return float(out) if scalar else out

    @property
    def plus_slopes(self) -> NDArray[np.float64]:
        """Cell slopes on I_0 (the derivative where it exists)."""
        i0 = self.grid.i0
        return np.diff(self.values[i0:]) / self.grid.plus_widths

    def sup_distance(self, other: "GridFun") -> float:
        _check_same_grid(self, other)
        return float(np.max(np.abs(self.values - other.values)))


def _check_same_grid(a: GridFun, b: GridFun) -> None:
    if not a.grid.same_as(b.grid):
        raise GridError("functions live on different grids")


def _check_interval(g: GridFun, a: float, b: float) -> tuple[float, float]:
    if a > b:
        raise GridError(f"empty interval: a = {a!r} > b = {b!r}")
    a, b = g.grid.snap([a, b])
    return float(a), float(b)


def extremum_on(g: GridFun, a: float, b: float, which: Literal["min", "max"]) -> float:
    """Exact min or max of ``g`` over ``[a, b]``.

    A piecewise-linear function attains its extrema at the interval ends or
    at interior nodes, so no sampling is involved.
    """
    if which not in ("min", "max"):
        raise ValueError(f"which must be 'min' or 'max', got {which!r}")
    a, b = _check_interval(g, a, b)
    nodes = g.grid.nodes
    lo = np.searchsorted(nodes, a, side="right")
    hi = np.searchsorted(nodes, b, side="left")
    ends = np.interp([a, b], nodes, g.values)
    inner = g.values[lo:hi]
    pick = np.min if which == "min" else np.max
    best = pick(ends)
    if inner.size:
        best = pick([best, pick(inner)])
    return float(best)


def range_extrema(
    g: GridFun, lo: NDArray[np.float64], hi: NDArray[np.float64], which: Literal["min", "max"]
) -> NDArray[np.float64]:
    """:func:`extremum_on` for many intervals at once."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    out = np.empty(lo.shape)
    point = lo == hi
    if np.any(point):
        out[point] = g(lo[point])
    for i in np.flatnonzero(~point):
        out[i] = extremum_on(g, lo[i], hi[i], which)
    return out


def integrate(g: GridFun, a: float, b: float) -> float:
    """Exact integral of the interpolant over ``[a, b]`` (trapezoid on each cell)."""
    a, b = _check_interval(g, a, b)
    if a == b:
        return 0.0
    nodes = g.grid.nodes
    lo = np.searchsorted(nodes, a, side="right")
    hi = np.searchsorted(nodes, b, side="left")
    ts = np.concatenate([[a], nodes[lo:hi], [b]])
    vs = np.interp(ts, nodes, g.values)
    return float(np.sum(0.5 * (vs[1:] + vs[:-1]) * np.diff(ts)))


def format_csv(g: GridFun) -> str:
    """``t,x`` CSV text with 17 significant digits and LF line endings."""
    buf = io.StringIO()
    buf.write("t,x\n")
    for t, v in zip(g.grid.nodes, g.values):
        buf.write(f"{t:.17g},{v:.17g}\n")
    return buf.getvalue()


def write_csv(g: GridFun, path: str | Path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_csv(g))


def read_csv(path: str | Path, t0: float, r: float, L: float) -> GridFun:
    """Read a ``t,x`` CSV back onto a grid with the given interval data."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return GridFun(TimeGrid(t0, r, L, data[:, 0]), data[:, 1])
