"""Command-line front end.

Exit codes: 0 success or pass, 1 internal error, 2 usage or input error,
3 verification failed, hypotheses violated or solver did not converge.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .bracket import BracketPair, make_bracket, verify
from .construct import construct_for_problem, default_bracket
from .errors import (
    BracketError,
    ConfigError,
    ConstructionUnsound,
    DevargError,
    DomainError,
    DomainExhausted,
    ExprSyntaxError,
    GridError,
    HypothesesViolated,
    SolverError,
    UnboundVariableError,
)
from .explore import extremal_search
from .expr import ExprFunction
from .gridfun import GridFun, write_csv
from .problem import ProblemSpec, load_problem, load_problem_file
from .registry import BUILTINS, builtin_problem
from .solver import SolveOptions, solve

log = logging.getLogger("devarg")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_FAIL = 0, 1, 2, 3
DEFAULT_GRID = 1000

PLOT_TEMPLATE = """\
# x, alpha and beta versus t; run with: gnuplot -p {name}
set datafile separator ","
set xlabel "t"
set ylabel "x"
set key top right
set grid
plot {series}
"""


class UsageError(Exception):
    pass


def _default_grid() -> int:
    env = os.environ.get("FDE_DEFAULT_GRID")
    if env is None:
        return DEFAULT_GRID
    try:
        n = int(env)
    except ValueError:
        raise UsageError(f"FDE_DEFAULT_GRID must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError("FDE_DEFAULT_GRID must be positive")
    return n


def _load(source: str, params: list[str]) -> ProblemSpec:
    kw = {}
    for item in params:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        kw[key] = value
    if source in BUILTINS:
        return builtin_problem(source, **kw)
    if kw:
        raise UsageError("--param only applies to builtin problems")
    if Path(source).is_file():
        return load_problem_file(source)
    if "=" in source:
        return load_problem(source.replace(";", "\n"))
    raise UsageError(f"--problem {source!r} is neither a builtin nor a config file")


def _bracket(p: ProblemSpec, args, grid_n: int) -> BracketPair:
    if (args.alpha is None) != (args.beta is None):
        raise UsageError("--alpha and --beta must be given together")
    if args.alpha is None:
        return default_bracket(p, grid_n)
    g = p.grid(grid_n)
    alpha = GridFun.from_callable(g, ExprFunction(args.alpha, allowed=("t",)))
    beta = GridFun.from_callable(g, ExprFunction(args.beta, allowed=("t",)))
    return make_bracket(alpha, beta, p.boundary)


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _write_plot(out: Path, have_bracket: bool) -> Path:
    series = []
    if have_bracket:
        series += [
            '"alpha.csv" every ::1 using 1:2 with lines title "alpha"',
            '"beta.csv" every ::1 using 1:2 with lines title "beta"',
        ]
    series.append(f'"{out.name}" every ::1 using 1:2 with lines lw 2 title "x"')
    script = out.parent / "plot.gp"
    _write(script, PLOT_TEMPLATE.format(name=script.name, series=", \\\n     ".join(series)))
    return script


# --- subcommands --------------------------------------------------------------


def cmd_list(args) -> int:
    for name in sorted(BUILTINS):
        _, accepted = BUILTINS[name]
        extra = f" ({', '.join(accepted)})" if accepted else ""
        print(f"{name}{extra}")
    return EXIT_OK


def cmd_solve(args) -> int:
    p = _load(args.problem, args.param)
    n = args.grid or _default_grid()
    opts = SolveOptions(method=args.method, max_iter=args.max_iter, fp_tol=args.fp_tol,
                        grid=p.grid(n), damping=args.damping, init=args.init,
                        substeps=args.substeps)
    b = None
    if args.method != "steps" or args.alpha is not None or (args.plot and p.alpha is not None):
        b = _bracket(p, args, n)
    rep = solve(p, b, opts)
    out = Path(args.out)
    write_csv(rep.solution, out)
    if args.plot:
        if b is not None:
            write_csv(b.alpha, out.parent / "alpha.csv")
            write_csv(b.beta, out.parent / "beta.csv")
        _write_plot(out, b is not None)
    print(f"method: {rep.method}")
    print(f"converged: {'yes' if rep.converged else 'no'} ({rep.message or rep.iterations})")
    print(f"iterations: {rep.iterations}")
    print(f"last step: {rep.sup_step:.3e}")
    print(f"ode residual (sup): {rep.residual.ode_resid_sup:.3e}")
    print(f"start-condition residual (sup): {rep.residual.boundary_resid_sup:.3e}")
    if rep.below_alpha is not None:
        print(f"max(alpha - x): {rep.below_alpha + 0.0:.3e}  max(x - beta): {rep.above_beta + 0.0:.3e}")
    print(f"solution written to {out}")
    return EXIT_OK if rep.converged else EXIT_FAIL


def cmd_verify(args) -> int:
    p = _load(args.problem, args.param)
    n = args.grid or _default_grid()
    b = _bracket(p, args, n)
    kw = {"tol": args.tol}
    if args.definition == "new":
        kw.update(quad_nodes=args.quad_nodes, envelope=args.envelope)
    rep = verify(p, b, args.definition, **kw)
    if args.out:
        _write(Path(args.out), rep.to_csv())
    print(f"definition: {rep.definition}")
    print(f"verdict: {rep.label()}")
    if rep.error is not None:
        print(f"evaluation error: {rep.error}")
    else:
        print(f"worst lower margin: {rep.worst_lower + 0.0:.9g} (differential {rep.worst_lower_ode + 0.0:.9g})")
        print(f"worst upper margin: {rep.worst_upper + 0.0:.9g} (differential {rep.worst_upper_ode + 0.0:.9g})")
    return EXIT_OK if rep.passed else EXIT_FAIL


def _parse_domain(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(s) for s in text.split(":"))
    except ValueError:
        raise UsageError(f"--domain expects lo:hi, got {text!r}") from None
    return lo, hi


def cmd_construct(args) -> int:
    p = _load(args.problem, args.param)
    n = args.grid or _default_grid()
    pair, trace = construct_for_problem(p, n, _parse_domain(args.domain))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(pair.alpha, out / "alpha.csv")
    write_csv(pair.beta, out / "beta.csv")
    _write(out / "trace.txt", trace.to_text())
    sys.stdout.write(trace.to_text())
    print(f"bracket written to {out / 'alpha.csv'} and {out / 'beta.csv'}")
    return EXIT_OK


def cmd_explore(args) -> int:
    p = _load(args.problem, args.param)
    n = args.grid or _default_grid()
    b = _bracket(p, args, n)
    opts = SolveOptions(max_iter=args.max_iter, fp_tol=args.fp_tol, damping=args.damping)
    rep = extremal_search(p, b, opts=opts, n_seeds=args.seeds,
                          resid_threshold=args.resid_threshold)
    out = Path(args.out)
    _write(out, rep.to_csv())
    _write(out.with_name(out.stem + "_matrix.csv"), rep.matrix_csv())
    print(rep.summary())
    return EXIT_OK if rep.solutions else EXIT_FAIL


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="devarg",
        description="Lower/upper solutions and solvers for equations with deviated arguments.",
    )
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    sub.add_parser("list", help="list builtin problems").set_defaults(func=cmd_list)

    def common(sp, bracket=True):
        sp.add_argument("--problem", required=True,
                        help="builtin name, config file, or inline 'key = value; ...' text")
        sp.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="builtin parameter (repeatable)")
        sp.add_argument("--grid", type=int, default=None,
                        help=f"cells on I_0 (default $FDE_DEFAULT_GRID or {DEFAULT_GRID})")
        if bracket:
            sp.add_argument("--alpha", help="lower solution, expression in t")
            sp.add_argument("--beta", help="upper solution, expression in t")

    def iteration(sp, fp_tol=1e-10, damping=1.0):
        sp.add_argument("--max-iter", type=int, default=200)
        sp.add_argument("--fp-tol", type=float, default=fp_tol)
        sp.add_argument("--damping", type=float, default=damping)

    sp = sub.add_parser("solve", help="solve a problem and write the solution CSV")
    common(sp)
    iteration(sp)
    sp.add_argument("--method", default="picard",
                    choices=["picard", "steps", "monotone_from_lower", "monotone_from_upper"])
    sp.add_argument("--init", default="mid", choices=["mid", "lower", "upper"],
                    help="initial Picard iterate")
    sp.add_argument("--substeps", type=int, default=1, help="RK4 substeps per cell")
    sp.add_argument("--out", default="sol.csv")
    sp.add_argument("--plot", action="store_true",
                    help="also write alpha.csv, beta.csv and a gnuplot script plot.gp")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify", help="check a lower/upper pair")
    common(sp)
    sp.add_argument("--definition", default="new", choices=["new", "classical"])
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--quad-nodes", type=int, default=64)
    sp.add_argument("--envelope", default="declared", choices=["declared", "whole"])
    sp.add_argument("--out", help="margins CSV")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("construct", help="build a linear lower/upper pair automatically")
    common(sp, bracket=False)
    sp.add_argument("--domain", default="-1e6:1e6", help="threshold search domain lo:hi")
    sp.add_argument("--out-dir", default=".")
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("explore", help="multi-seed search for extremal solutions")
    common(sp)
    iteration(sp, fp_tol=1e-8)
    sp.add_argument("--seeds", type=int, default=9)
    sp.add_argument("--resid-threshold", type=float, default=1e-4)
    sp.add_argument("--out", default="explore.csv")
    sp.set_defaults(func=cmd_explore)
    return ap


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ConfigError, GridError, ExprSyntaxError, BracketError,
            UnboundVariableError, ValueError) as exc:
        print(f"devarg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HypothesesViolated, DomainExhausted) as exc:
        print(f"devarg: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ConstructionUnsound as exc:
        print(f"devarg: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (SolverError, DomainError) as exc:
        print(f"devarg: solver failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except DevargError as exc:
        print(f"devarg: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except OSError as exc:
        print(f"devarg: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"devarg: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main(argv: list[str] | None = None) -> int:
    return run_cli(argv)


if __name__ == "__main__":
    sys.exit(main())
