"""
Wardowski functions F: R_+ -> R ∪ {-∞} and their property checkers.

A `WardowskiFunction` wraps a float evaluator for t > 0 together with the
metadata the checkers rely on: the declared discontinuity set, left continuity
and strict versus non-strict increase. Built-in families are registered in
`FAMILIES` under the names the experiment config uses.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple

from .exceptions import InvalidParameter, PreconditionViolated
from .models import (
    AxiomCheck,
    AxiomReport,
    Lemma2Result,
    RegularityStatus,
    RegularityVerdict,
)
from .numerics import DEFAULT_TOLERANCE, NEG_INF, ExtReal, Tolerance

logger = logging.getLogger(__name__)

UNBOUNDEDNESS_LADDER: Tuple[float, ...] = tuple(-(10.0**i) for i in range(1, 7))
REGULARITY_THRESHOLDS: Tuple[float, ...] = (1e-1, 1e-2, 1e-3)
LEMMA2_BOUNDS: Tuple[float, ...] = (-1.0, -2.0, -5.0, -10.0)
LEMMA2_EPS: Tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)
APPROACH_STEPS = 52
JUMP_TOL = 1e-6
AGREE_RUN = 16


def default_zero_seq(count: int = 160) -> list[float]:
    """t_i = 10^(-i/4), i = 1..count; reaches 1e-40 with the default count."""
    return [10.0 ** (-i / 4.0) for i in range(1, count + 1)]


def default_grid() -> list[float]:
    """Log-spaced grid on [0.01, 10]."""
    return [10.0 ** (-2.0 + 3.0 * i / 60.0) for i in range(61)]


@dataclass(frozen=True)
class WardowskiFunction:
    """
    F with F(0) = -inf and F(t) = fn(t) for t > 0.

    `discontinuities` is the declared Δ(F), sorted; `strict` selects the
    (b02) strictly increasing reading over the (b04) nondecreasing one.
    """

    name: str
    fn: Callable[[float], float]
    discontinuities: Tuple[float, ...] = ()
    left_continuous: bool = True
    strict: bool = True
    params: Mapping[str, float] = field(default_factory=dict)
    zero_value: Optional[Callable[[], float]] = None

    def __call__(self, t: float) -> ExtReal:
        if t < 0:
            raise PreconditionViolated(f"{self.name} is defined on t >= 0, got {t}")
        if t == 0:
            if self.zero_value is None:
                return NEG_INF
            return ExtReal.coerce(self.zero_value())
        return ExtReal.coerce(self.fn(t))

    @classmethod
    def from_callable(
        cls,
        fn: Callable[[float], float],
        *,
        name: str = "user",
        discontinuities: Sequence[float] = (),
        left_continuous: bool = True,
        strict: bool = True,
        zero_value: Optional[Callable[[], float]] = None,
    ) -> "WardowskiFunction":
        """
        Wrap any float callable. F(0) is NegInf unless `zero_value` is given,
        in which case F(0) = zero_value() and (b01) becomes checkable at 0.
        """
        return cls(
            name=name,
            fn=fn,
            discontinuities=tuple(sorted(discontinuities)),
            left_continuous=left_continuous,
            strict=strict,
            zero_value=zero_value,
        )


def _require_positive(**params: float) -> None:
    for key, value in params.items():
        if not value > 0:
            raise InvalidParameter(f"{key} must be positive, got {value}", key)


def make_log_poly(alpha: float, beta: float, gamma: float) -> WardowskiFunction:
    """F(t) = ln(alpha t^2 + beta t) + gamma t."""
    _require_positive(alpha=alpha, beta=beta, gamma=gamma)
    return WardowskiFunction(
        name="log_poly",
        fn=lambda t: math.log(alpha * t * t + beta * t) + gamma * t,
        params={"alpha": alpha, "beta": beta, "gamma": gamma},
    )


def make_neg_power(delta: float) -> WardowskiFunction:
    """F(t) = -t^(-delta)."""
    _require_positive(delta=delta)
    return WardowskiFunction(
        name="neg_power",
        fn=lambda t: -(t ** (-delta)),
        params={"delta": delta},
    )


def make_log() -> WardowskiFunction:
    """F(t) = ln t; with a = -ln(alpha) this is the Banach case."""
    return WardowskiFunction(name="log", fn=math.log)


def make_step_log(jump: float, at: float) -> WardowskiFunction:
    """ln t, plus `jump` from t = at onward. Right-continuous at `at`."""
    _require_positive(jump=jump, at=at)
    return WardowskiFunction(
        name="step_log",
        fn=lambda t: math.log(t) + (jump if t >= at else 0.0),
        discontinuities=(at,),
        left_continuous=False,
        params={"jump": jump, "at": at},
    )


def make_staircase_log(width: float, window: float = 1e6) -> WardowskiFunction:
    """
    width * floor(ln t / width): nondecreasing, not strict, right-continuous.

    Jumps sit at exp(k * width) for every integer k; those inside
    [1/window, window] are declared.
    """
    _require_positive(width=width, window=window)
    k_max = math.ceil(math.log(window) / width)
    jumps = tuple(math.exp(k * width) for k in range(-k_max, k_max + 1))
    return WardowskiFunction(
        name="staircase_log",
        fn=lambda t: width * math.floor(math.log(t) / width),
        discontinuities=jumps,
        left_continuous=False,
        strict=False,
        params={"width": width},
    )


FAMILIES: Dict[str, Callable[..., WardowskiFunction]] = {
    "log_poly": make_log_poly,
    "neg_power": make_neg_power,
    "log": make_log,
    "step_log": make_step_log,
    "staircase_log": make_staircase_log,
}


def make_family(family: str, params: Optional[Mapping[str, Any]] = None) -> WardowskiFunction:
    """
    Build a registered family by name.

    Raises:
        InvalidParameter: For an unknown family, unknown parameter names or
            parameters outside the family's domain.
    """
    if family not in FAMILIES:
        raise InvalidParameter(
            f"unknown Wardowski family {family!r}; known: {sorted(FAMILIES)}", "family"
        )
    try:
        return FAMILIES[family](**dict(params or {}))
    except TypeError as e:
        raise InvalidParameter(f"bad parameters for {family}: {e}", "params") from e


def _agree(u: ExtReal, v: ExtReal, tol: Tolerance) -> bool:
    if u.is_neg_inf or v.is_neg_inf:
        return u.is_neg_inf and v.is_neg_inf
    lo, hi = sorted((u.to_float(), v.to_float()))
    return tol.is_met(lo, hi)


def _one_sided(F: WardowskiFunction, t: float, sign: float, tol: Tolerance) -> Optional[ExtReal]:
    """
    F at t(1 + sign 2^-i), i = 1, 2, ..., until AGREE_RUN successive values
    agree within tol. Equal values on a plateau beyond a nearby jump must not
    end the walk.
    """
    last: Optional[ExtReal] = None
    run = 0
    for i in range(1, APPROACH_STEPS + 1):
        s = t * (1.0 + sign * 2.0**-i)
        if s == t:
            break
        value = F(s)
        run = run + 1 if last is not None and _agree(last, value, tol) else 0
        last = value
        if run >= AGREE_RUN:
            break
    return last


def is_declared_jump(F: WardowskiFunction, t: float, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    return any(math.isclose(t, d, rel_tol=1e-12, abs_tol=tol.abs_tol) for d in F.discontinuities)


def lateral_limits(
    F: WardowskiFunction, t: float, tol: Tolerance = DEFAULT_TOLERANCE
) -> Tuple[ExtReal, ExtReal]:
    """
    Estimate (F(t-0), F(t+0)) from the approach points t(1 -/+ 2^-i).

    Each side moves towards t until successive values agree within tol; F is
    monotone, so the last value is the estimate. The result is clamped so
    F(t-0) <= F(t) <= F(t+0) holds. A jump above JUMP_TOL at an undeclared
    point, or none at a declared one, is logged.
    """
    if not t > 0:
        raise PreconditionViolated(f"lateral limits need t > 0, got {t}")
    value = F(t)
    left_limit = _one_sided(F, t, -1.0, tol)
    right_limit = _one_sided(F, t, 1.0, tol)
    if left_limit is None or left_limit > value:
        left_limit = value
    if right_limit is None or right_limit < value:
        right_limit = value
    jumps = _jump_size(left_limit, right_limit) > JUMP_TOL
    declared = is_declared_jump(F, t, tol)
    if jumps and not declared:
        logger.warning("%s jumps at %g, which is not a declared discontinuity", F.name, t)
    elif declared and not jumps:
        logger.warning("%s declares a discontinuity at %g but is continuous there", F.name, t)
    logger.debug("%s lateral limits at %g: (%s, %s)", F.name, t, left_limit, right_limit)
    return left_limit, right_limit


def _jump_size(left: ExtReal, right: ExtReal) -> float:
    if left.is_neg_inf:
        return 0.0 if right.is_neg_inf else math.inf
    return right.to_float() - left.to_float()


def check_declared_jumps(
    F: WardowskiFunction,
    grid: Optional[Sequence[float]] = None,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> AxiomCheck:
    """
    Compare measured jumps with F.discontinuities.

    Checks every grid point and every declared point inside the grid's range.
    Fails on the first undeclared jump or declared point without a jump.
    """
    grid = list(grid) if grid is not None else default_grid()
    lo, hi = min(grid), max(grid)
    points = sorted(set(grid) | {d for d in F.discontinuities if lo <= d <= hi})
    for t in points:
        left, right = lateral_limits(F, t, tol)
        jumps = _jump_size(left, right) > JUMP_TOL
        declared = is_declared_jump(F, t, tol)
        if jumps != declared:
            what = "undeclared jump" if jumps else "declared point without a jump"
            return AxiomCheck(
                name="declared_jumps", passed=False, witness=[t], detail=f"{what} at {t}"
            )
    return AxiomCheck(
        name="declared_jumps", passed=True, detail=f"declarations agree on {len(points)} points"
    )


def _check_b01(F: WardowskiFunction, points: Sequence[float]) -> AxiomCheck:
    if not F(0.0).is_neg_inf:
        return AxiomCheck(name="b01", passed=False, witness=[0.0], detail="F(0) is finite")
    for t in points:
        if F(t).is_neg_inf:
            return AxiomCheck(
                name="b01", passed=False, witness=[t], detail=f"F({t}) = -inf with t > 0"
            )
    return AxiomCheck(name="b01", passed=True, detail="F(t) = -inf exactly at t = 0")


def _check_monotone(F: WardowskiFunction, grid: Sequence[float]) -> AxiomCheck:
    name = "b02" if F.strict else "b04"
    for t, s in zip(grid, grid[1:]):
        ft, fs = F(t), F(s)
        ok = ft < fs if F.strict else ft <= fs
        if not ok:
            return AxiomCheck(
                name=name,
                passed=False,
                witness=[t, s],
                detail=f"F({t}) = {ft} not {'<' if F.strict else '<='} F({s}) = {fs}",
            )
    return AxiomCheck(name=name, passed=True, detail=f"monotone on {len(grid)} grid points")


def _settles_below(values: Sequence[Any], limit: Any) -> bool:
    """The values fall below `limit` and stay there over at least the last quarter."""
    if not values:
        return False
    rank = 0
    for i, v in enumerate(values):
        if not v < limit:
            rank = i + 1
    return rank <= len(values) - max(1, len(values) // 4)


def _check_b03(
    F: WardowskiFunction, zero_seq: Sequence[float], ladder: Sequence[float]
) -> AxiomCheck:
    values = [F(t) for t in zero_seq]
    for i in range(len(values) - 1):
        ok = values[i + 1] < values[i] if F.strict else values[i + 1] <= values[i]
        if not ok:
            return AxiomCheck(
                name="b03",
                passed=False,
                witness=[zero_seq[i], zero_seq[i + 1]],
                detail="F does not decrease along the zero sequence",
            )
    unreached = [b for b in ladder if not any(v < ExtReal.finite(b) for v in values)]
    if not unreached:
        return AxiomCheck(name="b03", passed=True, detail=f"F passes below {min(ladder)}")
    # Bounds out of double reach (ln t > -745 for every positive double) are
    # judged by the decrease per quarter of the sequence, which must not fade.
    quarter = len(values) // 4
    if quarter >= 1 and not values[-1].is_neg_inf:
        first = values[0].to_float() - values[quarter].to_float()
        last = values[-quarter - 1].to_float() - values[-1].to_float()
        if first > 0 and last >= 0.5 * first:
            return AxiomCheck(
                name="b03",
                passed=True,
                detail=(
                    f"bounds from {max(unreached)} down judged by the decrease "
                    f"per quarter ({first:.4g} then {last:.4g})"
                ),
            )
    return AxiomCheck(
        name="b03",
        passed=False,
        witness=[max(unreached)],
        detail=f"F stays above {max(unreached)} along the zero sequence",
    )


def _check_order_reflection(F: WardowskiFunction, grid: Sequence[float]) -> AxiomCheck:
    values = [F(t) for t in grid]
    for i, t in enumerate(grid):
        for j, s in enumerate(grid):
            if values[i] < values[j] and not t < s:
                return AxiomCheck(
                    name="order_reflection",
                    passed=False,
                    witness=[t, s],
                    detail=f"F({t}) < F({s}) but {t} >= {s}",
                )
    return AxiomCheck(
        name="order_reflection", passed=True, detail=f"F(t) < F(s) => t < s on {len(grid)}^2 pairs"
    )


def check_axioms(
    F: WardowskiFunction,
    grid: Optional[Sequence[float]] = None,
    zero_seq: Optional[Sequence[float]] = None,
    ladder: Sequence[float] = UNBOUNDEDNESS_LADDER,
) -> AxiomReport:
    """
    Check (b01), (b02)/(b04), (b03), the order reflection F(t) < F(s) => t < s
    and the declared discontinuities against measured jumps.

    Args:
        F: The function to check.
        grid: Ascending positive grid for monotonicity and order reflection.
        zero_seq: Decreasing positive sequence tending to 0 for (b03).
        ladder: Bounds F must pass below along zero_seq.
    """
    grid = list(grid) if grid is not None else default_grid()
    zero_seq = list(zero_seq) if zero_seq is not None else default_zero_seq()
    if any(b > a for a, b in zip(grid, grid[1:])):
        raise PreconditionViolated("grid must be sorted ascending")
    report = AxiomReport(
        function=F.name,
        b01=_check_b01(F, grid + zero_seq),
        monotone=_check_monotone(F, grid),
        b03=_check_b03(F, zero_seq, ladder),
        order_reflection=_check_order_reflection(F, grid),
        declared_jumps=check_declared_jumps(F, grid),
    )
    if not report.all_passed:
        logger.info("axiom check for %s: %s", F.name, report.model_dump(include={"b01", "monotone", "b03", "order_reflection", "declared_jumps"}))
    return report


def classify_regularity(
    F: WardowskiFunction,
    k: float,
    zero_seq: Optional[Sequence[float]] = None,
    thresholds: Sequence[float] = REGULARITY_THRESHOLDS,
) -> RegularityVerdict:
    """
    Classify t^k F(t) -> 0 along a decreasing zero sequence.

    Regular when |t^k F(t)| eventually stays below every threshold; not
    regular when the magnitude grows monotonically over the second half of
    the sequence and ends above 1; inconclusive otherwise.
    """
    if not 0 < k < 1:
        raise PreconditionViolated(f"k must lie in (0, 1), got {k}")
    zero_seq = list(zero_seq) if zero_seq is not None else default_zero_seq()
    evidence = [(t, (t**k) * F(t).to_float()) for t in zero_seq]
    magnitudes = [abs(v) for _, v in evidence]

    if all(_settles_below(magnitudes, theta) for theta in thresholds):
        status = RegularityStatus.REGULAR
    else:
        second_half = magnitudes[len(magnitudes) // 2 :]
        growing = len(second_half) >= 2 and all(
            b > a for a, b in zip(second_half, second_half[1:])
        )
        status = (
            RegularityStatus.NOT_REGULAR
            if growing and second_half[-1] > 1.0
            else RegularityStatus.INCONCLUSIVE
        )
    logger.debug("%s at k=%g classified %s", F.name, k, status.value)
    return RegularityVerdict(k=k, status=status, evidence=evidence)


def lemma2_check(
    F: WardowskiFunction,
    seq: Sequence[float],
    f_values: Optional[Sequence[float]] = None,
    bounds: Sequence[float] = LEMMA2_BOUNDS,
    eps_ladder: Sequence[float] = LEMMA2_EPS,
) -> Lemma2Result:
    """
    Check F(t_n) -> -inf implies t_n -> 0 on a finite prefix.

    The premise holds when, for every bound, the tail of F(t_n) eventually
    stays below it; the implication then requires the tail of t_n to fall
    below every eps. `f_values` overrides F(t_n), which lets a harness feed
    values that no Wardowski function produces.
    """
    if any(not t > 0 for t in seq):
        raise PreconditionViolated("lemma2_check needs a positive sequence")
    values = (
        [ExtReal.coerce(v) for v in f_values] if f_values is not None else [F(t) for t in seq]
    )

    premise = all(_settles_below(values, ExtReal.finite(b)) for b in bounds)
    if not premise:
        return Lemma2Result(holds=True, premise=False)
    for eps in eps_ladder:
        if not _settles_below(list(seq), eps):
            logger.info("lemma2 harness: F(t_n) passed every bound but t_n stays above %g", eps)
            return Lemma2Result(holds=False, premise=True, witness_eps=eps)
    return Lemma2Result(holds=True, premise=True)
