"""
Comparison functions phi: linear, user supplied, or derived from (a, F) as
phi(t) = sup{s >= 0 : a + F(s) <= F(t)}.

Admissibility is a limit property, so the checks here report finite evidence:
iterates passing an eps ladder, or partial sums of sum_n phi^n(t) with a
geometric tail estimate when one can be read off the terms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

from .exceptions import InvalidParameter, RankNotFound
from .models import (
    AdmissibilityStatus,
    LadderCheck,
    MatkowskiVerdict,
    PhiDerivation,
    ProvenanceKind,
    SeriesResult,
    SeriesStatus,
    TailBoundCertificate,
)
from .numerics import (
    DEFAULT_TOLERANCE,
    Tolerance,
    ext_le,
    geometric_ratio,
    locate_sup_below,
)
from .wardowski import WardowskiFunction

logger = logging.getLogger(__name__)

BLOWUP_BOUND = 1e12
STALL_RATIO = 1.0 - 1e-9
STALL_RUN = 10_000
RATIO_WINDOW = 8


def _require_a(a: float) -> None:
    if not a > 0:
        raise InvalidParameter(f"a must be positive, got {a}", "a")


def derive_phi_certified(
    F: WardowskiFunction, a: float, t: float, tol: Tolerance = DEFAULT_TOLERANCE
) -> PhiDerivation:
    """
    Evaluate the derived phi at t and certify a + F(phi(t)) <= F(t).

    The search bracket is [0, t]: M(a,F)(t) lies in [0, t[ for t > 0. The
    self-inequality is certified when F is left-continuous, or when no
    declared discontinuity sits inside the final bracket (F is then
    continuous at the supremum).
    """
    _require_a(a)
    if t == 0:
        return PhiDerivation(t=0.0, phi=0.0, self_inequality=True, residual=math.inf)
    threshold = F(t) - a
    if F(0.0) > threshold:
        # empty sublevel set; only possible when F(0) is finite
        logger.info("no s with a + F(s) <= F(%g) for %s", t, F.name)
        return PhiDerivation(t=t, phi=0.0, self_inequality=False, residual=-math.inf)
    bracket = locate_sup_below(F, threshold, 0.0, t, tol)
    if bracket.exhausted:
        logger.warning("phi(%g) bisection exhausted; bracket width %g", t, bracket.width)
    value = bracket.lo
    slack = tol.abs_tol
    jump_at_sup = any(
        bracket.lo - slack <= d <= bracket.hi + slack for d in F.discontinuities
    )
    certified = F.left_continuous or not jump_at_sup
    if not certified:
        logger.info(
            "phi(%g) for %s sits at a declared jump; no self-inequality certificate",
            t,
            F.name,
        )
    f_value = F(value)
    residual = math.inf if f_value.is_neg_inf else (threshold.to_float() - f_value.to_float())
    return PhiDerivation(t=t, phi=value, self_inequality=certified, residual=residual)


def derive_phi(
    F: WardowskiFunction, a: float, t: float, tol: Tolerance = DEFAULT_TOLERANCE
) -> float:
    """
    sup{s >= 0 : a + F(s) <= F(t)} within tol.

    Raises:
        InvalidParameter: If a <= 0.
    """
    return derive_phi_certified(F, a, t, tol).phi


@dataclass(frozen=True)
class ComparisonFunction:
    """An increasing regressive phi with its provenance."""

    fn: Callable[[float], float]
    kind: ProvenanceKind
    name: str
    alpha: Optional[float] = None
    F: Optional[WardowskiFunction] = None
    a: Optional[float] = None
    tol: Optional[Tolerance] = None

    def __call__(self, t: float) -> float:
        if t == 0:
            return 0.0
        return self.fn(t)

    @classmethod
    def linear(cls, alpha: float) -> "ComparisonFunction":
        if not 0 < alpha < 1:
            raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}", "alpha")
        return cls(fn=lambda t: alpha * t, kind=ProvenanceKind.LINEAR, name=f"linear({alpha})", alpha=alpha)

    @classmethod
    def derived(
        cls, F: WardowskiFunction, a: float, tol: Tolerance = DEFAULT_TOLERANCE
    ) -> "ComparisonFunction":
        _require_a(a)
        return cls(
            fn=lambda t: derive_phi(F, a, t, tol),
            kind=ProvenanceKind.DERIVED,
            name=f"derived({F.name}, a={a})",
            F=F,
            a=a,
            tol=tol,
        )

    @classmethod
    def user(cls, fn: Callable[[float], float], name: str = "user") -> "ComparisonFunction":
        return cls(fn=fn, kind=ProvenanceKind.USER, name=name)

    @property
    def slack(self) -> float:
        """Absolute error of one evaluation: the bisection width when derived."""
        if self.kind is ProvenanceKind.DERIVED and self.tol is not None:
            return 2.0 * self.tol.abs_tol
        return 0.0

    def series(
        self, t: float, tol: Tolerance = DEFAULT_TOLERANCE, n_cap: int = 100_000
    ) -> SeriesResult:
        return phi_series(self, t, tol, n_cap)


def iterate_phi(phi: Callable[[float], float], t: float, n: int) -> float:
    """phi^n(t), with phi^0(t) = t."""
    value = t
    for _ in range(n):
        if value == 0:
            break
        value = phi(value)
    return value


def check_matkowski(
    phi: Callable[[float], float],
    t_grid: Sequence[float],
    n_cap: int,
    eps_ladder: Sequence[float],
) -> List[MatkowskiVerdict]:
    """
    Evidence for phi^n(t) -> 0 at each grid point.

    Verified when the iterates pass below every ladder eps within n_cap
    steps. Refuted only with a witness s > 0 and phi(s) >= s, since an
    increasing phi then keeps every later iterate at or above s. Otherwise
    inconclusive.
    """
    if n_cap < 1:
        raise InvalidParameter(f"n_cap must be at least 1, got {n_cap}", "n_cap")
    floor = min(eps_ladder)
    verdicts = []
    for t in t_grid:
        value = t
        steps: Optional[int] = 0 if value < floor else None
        witness: Optional[float] = None
        n = 0
        while steps is None and n < n_cap:
            nxt = phi(value)
            n += 1
            if value > 0 and nxt >= value:
                witness = value
                value = nxt
                break
            value = nxt
            if value < floor:
                steps = n
        if steps is not None:
            status = AdmissibilityStatus.VERIFIED
        elif witness is not None:
            status = AdmissibilityStatus.REFUTED
        else:
            status = AdmissibilityStatus.INCONCLUSIVE
            logger.info("phi^n(%g) still %g after %d steps", t, value, n_cap)
        verdicts.append(
            MatkowskiVerdict(t=t, status=status, steps=steps, last_value=value, witness=witness)
        )
    return verdicts


def phi_series(
    phi: Callable[[float], float],
    t: float,
    tol: Tolerance = DEFAULT_TOLERANCE,
    n_cap: int = 100_000,
    blowup: float = BLOWUP_BOUND,
) -> SeriesResult:
    """
    Partial sums of Phi(t) = t + phi(t) + phi^2(t) + ...

    Converged once the terms decay geometrically with ratio r and the running
    term is at most tol * (1 - r); the tail estimate is term * r / (1 - r).
    Diverging when the partial sum passes `blowup` with non-vanishing terms,
    or when the terms stall (ratio >= 1 - 1e-9) for 10^4 consecutive steps.
    Inconclusive otherwise.
    """
    if t == 0:
        return SeriesResult(value=0.0, truncated_at=0, status=SeriesStatus.CONVERGED)
    terms: List[float] = [t]
    total = t
    stall = 0
    for n in range(1, n_cap + 1):
        prev = terms[-1]
        term = phi(prev)
        if term == 0:
            return SeriesResult(value=total, truncated_at=n - 1, status=SeriesStatus.CONVERGED)
        terms.append(term)
        total += term
        stall = stall + 1 if term >= STALL_RATIO * prev else 0
        if stall >= STALL_RUN or (total > blowup and term >= tol.abs_tol):
            logger.info("series at t=%g diverging after %d terms (sum %g)", t, n, total)
            return SeriesResult(value=total, truncated_at=n, status=SeriesStatus.DIVERGING)
        if n % RATIO_WINDOW == 0:
            ratio = geometric_ratio(terms[-(2 * RATIO_WINDOW + 1) :], RATIO_WINDOW)
            if ratio is not None and term <= tol.abs_tol * (1.0 - ratio):
                return SeriesResult(
                    value=total,
                    truncated_at=n,
                    tail_estimate=term * ratio / (1.0 - ratio),
                    ratio=ratio,
                    status=SeriesStatus.CONVERGED,
                )
    logger.info("series at t=%g inconclusive after %d terms (sum %g)", t, n_cap, total)
    return SeriesResult(value=total, truncated_at=n_cap, status=SeriesStatus.INCONCLUSIVE)


def check_phi_ladder(
    F: WardowskiFunction,
    a: float,
    t: float,
    n: int,
    phi: Optional[Callable[[float], float]] = None,
    slack: float = 0.0,
) -> LadderCheck:
    """
    Check a + F(t_{i+1}) <= F(t_i) and F(t_i) <= F(t_0) - i a on the orbit
    t_{i+1} = phi(t_i), stopping early when the orbit reaches 0.
    """
    _require_a(a)
    phi = phi or ComparisonFunction.derived(F, a)
    orbit = [t]
    for _ in range(n):
        if orbit[-1] == 0:
            break
        orbit.append(phi(orbit[-1]))
    return ladder_check(F, a, orbit, slack)


def ladder_check(
    F: WardowskiFunction, a: float, orbit: Sequence[float], slack: float = 0.0
) -> LadderCheck:
    """Step and cumulative F-decrease along any orbit of nonnegative reals."""
    values = [F(u) for u in orbit]
    step_ok = True
    cumulative_ok = True
    first: Optional[int] = None
    for i in range(len(values) - 1):
        if values[i].is_neg_inf:
            break
        if not ext_le(values[i + 1] + a, values[i], slack):
            step_ok = False
            first = i if first is None else first
        if not ext_le(values[i + 1], values[0] - (i + 1) * a, slack):
            cumulative_ok = False
            first = i if first is None else first
    return LadderCheck(
        checked=max(len(values) - 1, 0),
        step_holds=step_ok,
        cumulative_holds=cumulative_ok,
        first_violation=first,
    )


def tail_bound_orbit(
    orbit: Sequence[float],
    F: WardowskiFunction,
    a: float,
    k: float,
    beta: Optional[float] = None,
    burn_in: Optional[int] = None,
) -> TailBoundCertificate:
    """
    Certify u_n <= (beta / (a n))^(1/k) beyond a rank on a positive orbit.

    w_n = [F(u_0) - F(u_n)] u_n^k tends to 0 for a k-regular F; the rank i is
    the least index with w_n <= beta for every recorded n >= i (and i >= 1).
    Without an explicit beta, beta is 1.05 times the largest w_n over the
    burn-in window (the first quarter of the orbit by default).

    Raises:
        RankNotFound: If w_n exceeds beta at the last recorded index, or an
            orbit point beyond the rank breaks the bound.
    """
    _require_a(a)
    if not 0 < k < 1:
        raise InvalidParameter(f"k must lie in (0, 1), got {k}", "k")
    length = len(orbit)
    if length <= 1:
        return TailBoundCertificate(
            k=k, beta=beta or 0.0, a=a, from_rank=0, checked_until=length - 1,
            holds_on_prefix=True, tail_sum_bound=0.0,
        )
    f0 = F(orbit[0]).to_float()
    weights = [(f0 - F(u).to_float()) * (u**k) for u in orbit]
    if beta is None:
        window = burn_in if burn_in is not None else max(2, length // 4)
        beta = 1.05 * max(weights[1:window] or weights[1:2])
    if not beta > 0:
        raise RankNotFound(f"beta must be positive, got {beta}")
    rank = 1
    for n in range(1, length):
        if weights[n] > beta:
            rank = n + 1
    if rank >= length:
        raise RankNotFound(
            f"w_n = [F(u_0) - F(u_n)] u_n^k exceeds beta={beta:g} at the last "
            f"recorded index {length - 1}"
        )
    exponent = 1.0 / k
    for n in range(rank, length):
        if orbit[n] > (beta / (a * n)) ** exponent:
            logger.warning("tail bound violated at %d beyond rank %d", n, rank)
            raise RankNotFound(
                f"u_{n} = {orbit[n]:g} exceeds (beta / (a n))^(1/k) beyond rank {rank}; "
                "the orbit is not (a,F)-contractive"
            )
    tail_sum = (beta / a) ** exponent * _power_tail(rank, exponent)
    return TailBoundCertificate(
        k=k,
        beta=beta,
        a=a,
        from_rank=rank,
        checked_until=length - 1,
        holds_on_prefix=True,
        tail_sum_bound=tail_sum,
    )


def _power_tail(start: int, p: float) -> float:
    """Upper bound on sum_{n >= start} n^-p for p > 1: start^-p + start^(1-p)/(p-1)."""
    return start ** (-p) + start ** (1.0 - p) / (p - 1.0)
