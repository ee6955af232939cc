"""Multi-seed exploration of the solution set inside a bracket.

Every seed is run through the fixed-point iteration; the converged,
small-residual results are deduplicated and ordered by the integral
``I(x) = int_{t0}^{t0+L} x``. The maximizer of ``I`` over a set of solutions
is maximal in that set (nothing distinct lies above it), but it need not be
the greatest: the pairwise comparability matrix shows whether some pair of
computed solutions is incomparable. All statements concern the computed
finite set only.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .bracket import BracketPair
from .errors import DevargError, GridError
from .gridfun import GridFun, integrate
from .problem import ProblemSpec
from .solver import SolveOptions, SolveReport, picard_solve

__all__ = [
    "ExploreReport",
    "functional_I",
    "compare",
    "default_seeds",
    "dedup",
    "extremal_search",
    "REFERENCE_FAMILIES",
]

Relation = Literal["leq", "geq", "equal", "incomparable"]


def functional_I(x: GridFun, t0: float | None = None, L: float | None = None) -> float:
    """Integral of ``x`` over [t0, t0 + L] (the forward interval by default)."""
    g = x.grid
    t0 = g.t0 if t0 is None else t0
    L = g.L if L is None else L
    return integrate(x, t0, t0 + L)


def compare(x1: GridFun, x2: GridFun, tol: float = 1e-9) -> Relation:
    """Pointwise order of two functions on a common grid, up to ``tol``."""
    if not x1.grid.same_as(x2.grid):
        raise GridError("cannot compare functions on different grids")
    d = x1.values - x2.values
    if np.max(np.abs(d)) <= tol:
        return "equal"
    if np.max(d) <= tol:
        return "leq"
    if np.min(d) >= -tol:
        return "geq"
    return "incomparable"


def _lambda_cos_defect(x: GridFun) -> float:
    lam = x(0.0)
    return float(np.max(np.abs(x.values - lam * np.cos(x.grid.nodes))))


# name -> (defect function, threshold): solutions whose defect exceeds the
# threshold do not look like a member of the known explicit family
REFERENCE_FAMILIES: dict[str, tuple[Callable[[GridFun], float], float]] = {
    "example2_6": (_lambda_cos_defect, 1e-3),
}


@dataclass
class ExploreReport:
    solutions: list[SolveReport]
    seed_index: list[int]
    i_values: list[float]
    comparability: list[list[Relation]]
    argmax_i: int | None
    argmin_i: int | None
    has_incomparable_pair: bool
    failures: list[tuple[int, str]] = field(default_factory=list)
    flagged: list[int] = field(default_factory=list)
    n_seeds: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index,seed,converged,iterations,ode_resid,boundary_resid,I,flag\n")
        for i, (s, rep, iv) in enumerate(zip(self.seed_index, self.solutions, self.i_values)):
            tag = []
            if i == self.argmax_i:
                tag.append("max_I")
            if i == self.argmin_i:
                tag.append("min_I")
            if i in self.flagged:
                tag.append("off_family")
            buf.write(
                f"{i},{s},{int(rep.converged)},{rep.iterations},"
                f"{rep.residual.ode_resid_sup:.17g},{rep.residual.boundary_resid_sup:.17g},"
                f"{iv:.17g},{'+'.join(tag)}\n"
            )
        for s, msg in self.failures:
            buf.write(f"# seed {s} rejected: {msg}\n")
        return buf.getvalue()

    def matrix_csv(self) -> str:
        n = len(self.solutions)
        buf = io.StringIO()
        buf.write(",".join(["i"] + [str(j) for j in range(n)]) + "\n")
        for i, row in enumerate(self.comparability):
            buf.write(",".join([str(i)] + list(row)) + "\n")
        return buf.getvalue()

    def summary(self) -> str:
        n = len(self.solutions)
        lines = [f"{n} distinct solution(s) from {self.n_seeds} seed(s), {len(self.failures)} rejected"]
        if n:
            lines.append(f"I range: [{self.i_values[self.argmin_i]:.6g}, {self.i_values[self.argmax_i]:.6g}]")
            lines.append(f"maximal among computed solutions: #{self.argmax_i}")
            lines.append(f"minimal among computed solutions: #{self.argmin_i}")
        lines.append(f"incomparable pair present: {'yes' if self.has_incomparable_pair else 'no'}")
        if self.flagged:
            lines.append(f"outside the reference family: {self.flagged}")
        return "\n".join(lines)


def default_seeds(b: BracketPair, n: int = 9) -> list[GridFun]:
    """alpha + s (beta - alpha) for ``n`` equally spaced s in [0, 1]."""
    if n < 1:
        raise ValueError("need at least one seed")
    a, w = b.alpha.values, b.beta.values - b.alpha.values
    s = np.linspace(0.0, 1.0, n) if n > 1 else np.array([0.5])
    return [b.alpha.with_values(a + si * w) for si in s]


def dedup(xs: list[GridFun], tol: float) -> list[int]:
    """Indices of the first occurrence of every equivalence class under :func:`compare`."""
    keep: list[int] = []
    for i, x in enumerate(xs):
        if not any(compare(x, xs[j], tol) == "equal" for j in keep):
            keep.append(i)
    return keep


def extremal_search(
    p: ProblemSpec,
    b: BracketPair,
    seeds: list[GridFun] | None = None,
    opts: SolveOptions = SolveOptions(),
    n_seeds: int = 9,
    resid_threshold: float = 1e-4,
) -> ExploreReport:
    """Run Picard from every seed, keep converged small-residual solutions, and order them.

    Seeds are truncated into the bracket first. Dedup tolerance is
    ``10 * opts.fp_tol``; ties in ``I`` go to the lowest index.
    """
    if seeds is None:
        seeds = default_seeds(b, n_seeds)
    accepted: list[SolveReport] = []
    accepted_seed: list[int] = []
    failures: list[tuple[int, str]] = []
    for i, seed in enumerate(seeds):
        if not seed.grid.same_as(b.grid):
            failures.append((i, "seed lives on a different grid"))
            continue
        clipped = seed.with_values(np.clip(seed.values, b.alpha.values, b.beta.values))
        try:
            rep = picard_solve(p, b, SolveOptions(
                method="picard", max_iter=opts.max_iter, fp_tol=opts.fp_tol, grid=opts.grid,
                damping=opts.damping, init=clipped, substeps=opts.substeps,
            ))
        except DevargError as exc:
            failures.append((i, str(exc)))
            continue
        if not rep.converged:
            failures.append((i, rep.message))
        elif not rep.residual.ode_resid_sup <= resid_threshold:
            failures.append((i, f"residual {rep.residual.ode_resid_sup:.3g} above {resid_threshold:g}"))
        else:
            accepted.append(rep)
            accepted_seed.append(i)

    keep = dedup([r.solution for r in accepted], 10.0 * opts.fp_tol)
    sols = [accepted[k] for k in keep]
    seed_index = [accepted_seed[k] for k in keep]
    ivals = [functional_I(r.solution) for r in sols]
    order = sorted(range(len(sols)), key=lambda j: (ivals[j], seed_index[j]))
    sols = [sols[j] for j in order]
    seed_index = [seed_index[j] for j in order]
    ivals = [ivals[j] for j in order]

    tol = 10.0 * opts.fp_tol
    n = len(sols)
    mat: list[list[Relation]] = [
        [compare(sols[i].solution, sols[j].solution, tol) for j in range(n)] for i in range(n)
    ]
    argmax = int(np.argmax(ivals)) if n else None
    argmin = int(np.argmin(ivals)) if n else None
    incomparable = any(mat[i][j] == "incomparable" for i in range(n) for j in range(n))

    flagged = []
    family = REFERENCE_FAMILIES.get(p.name)
    if family is not None:
        defect, thresh = family
        flagged = [i for i, r in enumerate(sols) if defect(r.solution) > thresh]

    return ExploreReport(sols, seed_index, ivals, mat, argmax, argmin, incomparable,
                         failures, flagged, len(seeds))
