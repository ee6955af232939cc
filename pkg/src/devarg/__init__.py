"""Lower/upper solutions, solvers and exploration tools for first-order
functional differential equations with (possibly state-dependent) deviated
arguments: ``x'(t) = f(t, x(t), x(tau(t, x)))`` on ``[t0, t0 + L]`` with
``x = Lambda(x) + k`` on ``[t0 - r, t0]``.
"""

from .bracket import (
    BracketPair,
    VerificationReport,
    deviation_envelope,
    lambda_bounds,
    make_bracket,
    truncate,
    value_envelope,
    verify,
    verify_classical,
    verify_new,
)
from .construct import (
    ConstructionTrace,
    EnvelopePair,
    construct_autonomous,
    construct_enveloped,
    construct_for_problem,
    default_bracket,
    find_thresholds,
    history_extrema,
)
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
from .explore import ExploreReport, compare, extremal_search, functional_I
from .expr import ExprFunction, eval_expr, parse_expr, to_string
from .gridfun import (
    GridFun,
    TimeGrid,
    extremum_on,
    format_csv,
    integrate,
    make_grid,
    read_csv,
    write_csv,
)
from .problem import (
    DeviationSpec,
    FunctionalSpec,
    ProblemSpec,
    RhsSpec,
    load_problem,
    load_problem_file,
    parse_functional,
)
from .registry import builtin_problem, log_sine
from .solver import (
    ResidualReport,
    SolveOptions,
    SolveReport,
    apply_T,
    monotone_solve,
    picard_solve,
    residual,
    scalar_step,
    solve,
    steps_solve,
)

__version__ = "0.1.0"
