"""
Extended-real arithmetic and monotone boundary location.

`ExtReal` houses the codomain of a Wardowski function: a finite real or the
explicit `NegInf` variant. `monotone_sup_below` locates the supremum of a
sublevel set of a nondecreasing map by bisection, which keeps working when the
map jumps.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import BudgetExhausted, InvalidParameter, PreconditionViolated

logger = logging.getLogger(__name__)


class Ordering(str, enum.Enum):
    """Result of a total-order comparison."""

    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"


@dataclass(frozen=True, slots=True)
class ExtReal:
    """
    An element of R ∪ {-∞}.

    `value is None` is the NegInf variant. Finite values are never NaN or
    infinite; use `NEG_INF` (or `ExtReal.coerce(-math.inf)`) for -∞.
    """

    value: Optional[float] = None

    def __post_init__(self) -> None:
        if self.value is None:
            return
        if math.isnan(self.value):
            raise InvalidParameter("ExtReal cannot hold NaN", "value")
        if math.isinf(self.value):
            raise InvalidParameter(
                f"ExtReal finite variant cannot hold {self.value}", "value"
            )

    @classmethod
    def finite(cls, value: float) -> "ExtReal":
        return cls(float(value))

    @classmethod
    def coerce(cls, x: Union["ExtReal", float, int]) -> "ExtReal":
        """Convert a float to ExtReal, mapping -inf to NegInf."""
        if isinstance(x, ExtReal):
            return x
        x = float(x)
        if x == -math.inf:
            return NEG_INF
        return cls(x)

    @property
    def is_neg_inf(self) -> bool:
        return self.value is None

    def to_float(self) -> float:
        return -math.inf if self.value is None else self.value

    def __add__(self, other: Union["ExtReal", float, int]) -> "ExtReal":
        if isinstance(other, ExtReal):
            if other.is_neg_inf:
                return NEG_INF
            other = other.value  # type: ignore[assignment]
        if self.value is None:
            return NEG_INF
        return ExtReal(self.value + float(other))  # type: ignore[arg-type]

    __radd__ = __add__

    def __sub__(self, other: Union[float, int]) -> "ExtReal":
        return self + (-float(other))

    def __lt__(self, other: Union["ExtReal", float]) -> bool:
        return ext_compare(self, ExtReal.coerce(other)) is Ordering.LESS

    def __le__(self, other: Union["ExtReal", float]) -> bool:
        return ext_compare(self, ExtReal.coerce(other)) is not Ordering.GREATER

    def __gt__(self, other: Union["ExtReal", float]) -> bool:
        return ext_compare(self, ExtReal.coerce(other)) is Ordering.GREATER

    def __ge__(self, other: Union["ExtReal", float]) -> bool:
        return ext_compare(self, ExtReal.coerce(other)) is not Ordering.LESS

    def __str__(self) -> str:
        return "-inf" if self.value is None else repr(self.value)


NEG_INF = ExtReal(None)


def ext_compare(x: ExtReal, y: ExtReal) -> Ordering:
    """Total order on R ∪ {-∞}: NegInf sits below every finite value."""
    if x.value is None:
        return Ordering.EQUAL if y.value is None else Ordering.LESS
    if y.value is None:
        return Ordering.GREATER
    if x.value < y.value:
        return Ordering.LESS
    if x.value > y.value:
        return Ordering.GREATER
    return Ordering.EQUAL


def ext_le(x: ExtReal, y: ExtReal, slack: float = 0.0) -> bool:
    """`x <= y` up to a relative slack on the finite scale of `y`."""
    if slack <= 0.0 or x.is_neg_inf or y.is_neg_inf:
        return x <= y
    return x <= y + slack * max(1.0, abs(y.to_float()))


class Tolerance(BaseModel):
    """Stopping rule for bisection."""

    model_config = ConfigDict(frozen=True)

    abs_tol: float = Field(1e-10, ge=0.0, description="Absolute bracket width")
    rel_tol: float = Field(0.0, ge=0.0, description="Relative bracket width")
    max_bisection_steps: int = Field(
        200, gt=0, description="Maximum number of halvings"
    )

    @model_validator(mode="after")
    def _one_tolerance_positive(self) -> "Tolerance":
        if self.abs_tol <= 0.0 and self.rel_tol <= 0.0:
            raise ValueError("abs_tol or rel_tol must be positive")
        return self

    def is_met(self, lo: float, hi: float) -> bool:
        width = hi - lo
        return width <= self.abs_tol or width <= self.rel_tol * max(
            abs(lo), abs(hi)
        )


DEFAULT_TOLERANCE = Tolerance()


@dataclass(frozen=True)
class SupBracket:
    """Final bisection bracket: `lo` satisfies the threshold, `hi` does not."""

    lo: float
    hi: float
    steps: int
    exhausted: bool

    @property
    def width(self) -> float:
        return self.hi - self.lo


MonotoneMap = Callable[[float], Union[ExtReal, float]]


def locate_sup_below(
    g: MonotoneMap,
    threshold: Union[ExtReal, float],
    lo: float,
    hi: float,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> SupBracket:
    """
    Bisect for sup{s in [lo, hi] : g(s) <= threshold} with g nondecreasing.

    Returns the final bracket instead of raising when the step budget runs
    out; `exhausted` is set in that case.

    Raises:
        PreconditionViolated: If g(lo) > threshold or lo > hi.
    """
    if lo > hi:
        raise PreconditionViolated(f"empty interval [{lo}, {hi}]")
    threshold = ExtReal.coerce(threshold)
    if ExtReal.coerce(g(lo)) > threshold:
        raise PreconditionViolated(
            f"g({lo}) exceeds threshold {threshold}; sublevel set is empty"
        )
    if ExtReal.coerce(g(hi)) <= threshold:
        return SupBracket(lo=hi, hi=hi, steps=0, exhausted=False)

    steps = 0
    while not tol.is_met(lo, hi):
        if steps >= tol.max_bisection_steps:
            logger.debug("bisection budget exhausted at [%r, %r]", lo, hi)
            return SupBracket(lo=lo, hi=hi, steps=steps, exhausted=True)
        mid = lo + (hi - lo) / 2.0
        if mid <= lo or mid >= hi:
            # bracket no longer splits in double precision
            break
        if ExtReal.coerce(g(mid)) <= threshold:
            lo = mid
        else:
            hi = mid
        steps += 1
    return SupBracket(lo=lo, hi=hi, steps=steps, exhausted=False)


def monotone_sup_below(
    g: MonotoneMap,
    threshold: Union[ExtReal, float],
    lo: float,
    hi: float,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> float:
    """
    Supremum of the sublevel set {s in [lo, hi] : g(s) <= threshold}.

    The returned value r is the lower end of the final bracket, so
    g(r) <= threshold always holds.

    Raises:
        PreconditionViolated: If g(lo) > threshold.
        BudgetExhausted: If the step budget ran out; carries the best bracket.
    """
    bracket = locate_sup_below(g, threshold, lo, hi, tol)
    if bracket.exhausted:
        raise BudgetExhausted(
            f"bisection stopped after {bracket.steps} steps with width "
            f"{bracket.width}",
            lo=bracket.lo,
            hi=bracket.hi,
            steps=bracket.steps,
        )
    return bracket.lo


def geometric_ratio(
    values: Sequence[float], window: int = 8, ratio_cap: float = 1.0 - 1e-6
) -> Optional[float]:
    """
    Detect eventual geometric decay of a positive sequence.

    Looks at the ratios v[i+1]/v[i] over the last `2 * window` entries and
    returns the largest ratio of the final window when it is below
    `ratio_cap` and not larger than the largest ratio of the window before
    it. Returns None when the tail is too short or the ratios creep up.
    """
    if len(values) < 2 * window + 1:
        return None
    tail = values[-(2 * window + 1) :]
    if any(v <= 0.0 for v in tail):
        return None
    ratios = [tail[i + 1] / tail[i] for i in range(len(tail) - 1)]
    earlier = max(ratios[:window])
    latest = max(ratios[window:])
    # rounding noise on a constant ratio must not read as creeping up
    if latest >= ratio_cap or latest > earlier * (1.0 + 1e-9):
        return None
    return latest
