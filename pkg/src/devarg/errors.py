"""Exception hierarchy shared by all devarg modules."""

from __future__ import annotations


class DevargError(Exception):
    """Base class for every error raised by this package."""


class GridError(DevargError, ValueError):
    """Invalid grid construction or a query outside the grid's domain."""


class ExprSyntaxError(DevargError, ValueError):
    """Malformed expression text.

    ``position`` is the 0-based character offset where parsing failed.
    """

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.message = message
        self.position = position


class DomainError(DevargError, ArithmeticError):
    """An evaluation left the region where a function is defined.

    Raised for log of nonpositive numbers, division by zero, 0 to a negative
    power, square roots of negatives and any other non-finite result.
    ``where`` optionally records the time at which the failure happened.
    """

    def __init__(self, message: str, where: float | None = None):
        if where is not None:
            message = f"{message} (t = {where!r})"
        super().__init__(message)
        self.where = where


class ConfigError(DevargError, ValueError):
    """Problem configuration is incomplete or inconsistent."""


class BracketError(DevargError, ValueError):
    """A candidate (alpha, beta) pair is not ordered or otherwise unusable."""


class SolverError(DevargError, RuntimeError):
    """A solver precondition failed (not retarded, not monotone, ...)."""


class HypothesesViolated(DevargError):
    """A sufficient condition for the linear bracket construction fails.

    ``condition`` names the failing condition in words.
    """

    def __init__(self, condition: str, detail: str = ""):
        msg = f"hypotheses violated: {condition}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.condition = condition


class DomainExhausted(DevargError):
    """A threshold search reached the end of its finite search domain.

    Distinct from :class:`HypothesesViolated`: enlarging the domain may help.
    """

    def __init__(self, side: str, detail: str = ""):
        super().__init__(f"search domain exhausted on the {side} side {detail}".strip())
        self.side = side


class ConstructionUnsound(DevargError):
    """A constructed bracket failed its post-validation."""

    def __init__(self, report):
        super().__init__(
            f"constructed bracket failed verification "
            f"(worst lower {report.worst_lower:.3e}, worst upper {report.worst_upper:.3e})"
        )
        self.report = report


class UnboundVariableError(DevargError, NameError):
    """An expression referenced a variable that was not supplied."""
