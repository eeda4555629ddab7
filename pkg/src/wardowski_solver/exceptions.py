"""
This module defines custom exceptions for the wardowski solver.
"""

from typing import Any, Optional, Sequence


class WardowskiError(Exception):
    """Base class for all custom solver exceptions."""

    pass


class InvalidParameter(WardowskiError):
    """Raised when a constructor receives a parameter outside its domain."""

    def __init__(self, message: str, parameter: Optional[str] = None):
        super().__init__(message)
        self.parameter = parameter


class PreconditionViolated(WardowskiError):
    """Raised when an operation is called outside its precondition."""

    pass


class BudgetExhausted(WardowskiError):
    """Raised when a bisection runs out of steps before reaching tolerance."""

    def __init__(self, message: str, lo: float, hi: float, steps: int):
        super().__init__(message)
        self.lo = lo
        self.hi = hi
        self.steps = steps


class InvalidMetric(WardowskiError):
    """Raised when a distance matrix violates a metric axiom."""

    def __init__(
        self, message: str, axiom: str, indices: Optional[Sequence[int]] = None
    ):
        super().__init__(message)
        self.axiom = axiom
        self.indices = tuple(indices) if indices is not None else ()


class SeriesNotConvergent(WardowskiError):
    """Raised when a Hyers-Ulam bound needs a series that did not converge."""

    pass


class RankNotFound(WardowskiError):
    """Raised when no tail-bound rank exists on the recorded prefix."""

    pass


class PrefixTooShort(WardowskiError):
    """Raised when the witness set A(j) is empty on the recorded prefix."""

    def __init__(self, message: str, j: int):
        super().__init__(message)
        self.j = j


class EtaInDelta(WardowskiError):
    """Raised when the witness scale eta is one of the excluded points."""

    pass


class ConfigError(WardowskiError):
    """Base class for experiment config errors."""

    pass


class ConfigParseError(ConfigError):
    """Raised when a config file is not well-formed YAML."""

    pass


class ConfigSemanticError(ConfigError):
    """Raised when a config file parses but names bad values."""

    def __init__(self, message: str, field: Optional[str] = None, value: Any = None):
        super().__init__(message)
        self.field = field
        self.value = value


class ReportIOError(WardowskiError):
    """Raised when writing or reading a report file fails."""

    pass
