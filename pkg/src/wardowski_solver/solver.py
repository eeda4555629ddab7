"""
Picard iteration with convergence status and certificates.

A run records x_{n+1} = T(x_n) and rho_n = d(x_n, x_{n+1}). The status is one
of fixed-point hit, converged, budget exhausted or divergence suspected; the
certificates (Hyers-Ulam, regular tail bound, telescopic) are computed from the
recorded run afterwards and never extrapolate the limit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable, List, Optional, Sequence

import anyio
import numpy as np

from .comparison import ComparisonFunction, tail_bound_orbit
from .exceptions import PreconditionViolated, SeriesNotConvergent
from .interfaces import IMetricSpace, Point, PointMap
from .metric_space import SequenceTrace, tele_sum
from .models import (
    Certificate,
    HyersUlamCertificate,
    OperatorVerdict,
    RunStatus,
    RunSummary,
    SeriesResult,
    SeriesStatus,
    TailBoundCertificate,
    TeleSumCertificate,
)
from .numerics import geometric_ratio
from .wardowski import WardowskiFunction

logger = logging.getLogger(__name__)

CONVERGENCE_WINDOW = 8
DIVERGENCE_WINDOW = 32
TELE_WINDOW = 8


@dataclass(frozen=True)
class SelfMap:
    """A total map T of `space` into itself."""

    space: IMetricSpace
    apply: PointMap
    name: str = "T"

    def __call__(self, x: Point) -> Point:
        return self.apply(x)


def plain(point: Point) -> Any:
    """JSON-friendly form of a point."""
    if isinstance(point, np.ndarray):
        return point.tolist()
    if isinstance(point, np.generic):
        return point.item()
    return point


@dataclass
class PicardRun:
    trace: SequenceTrace
    status: RunStatus
    eps: float
    status_index: Optional[int] = None
    limit: Optional[Point] = None
    certificates: List[Certificate] = field(default_factory=list)

    @property
    def positive_rho(self) -> Sequence[float]:
        """rho up to (excluding) a fixed-point hit."""
        if self.status is RunStatus.FIXED_POINT_HIT:
            return self.trace.rho[: self.status_index]
        return self.trace.rho

    def to_summary(self) -> RunSummary:
        return RunSummary(
            start=plain(self.trace.points[0]),
            status=self.status,
            status_index=self.status_index,
            limit=None if self.limit is None else plain(self.limit),
            eps=self.eps,
            iterations=len(self.trace.rho),
            rho=list(self.trace.rho),
            certificates=list(self.certificates),
        )


def _window_shrinks(space: IMetricSpace, window: Sequence[Point], eps: float) -> bool:
    for i, x in enumerate(window[:-1]):
        if np.any(space.dists_from(x, window[i + 1 :]) > 2.0 * eps):
            return False
    return True


def picard_iterate(
    T: SelfMap,
    x0: Point,
    eps: float,
    max_iter: int,
    window: int = CONVERGENCE_WINDOW,
    divergence_window: int = DIVERGENCE_WINDOW,
) -> PicardRun:
    """
    Iterate T from x0 for at most max_iter steps.

    Stops with FIXED_POINT_HIT(n) at the first rho_n == 0, with CONVERGED once
    the last `window` rho are below eps and every pair among the last
    `window + 1` iterates is within 2 eps, and with DIVERGENCE_SUSPECTED after
    `divergence_window` strictly increasing rho. Otherwise the budget runs out.
    """
    if max_iter < 1:
        raise PreconditionViolated(f"max_iter must be at least 1, got {max_iter}")
    space = T.space
    points: List[Point] = [x0]
    rho: List[float] = []
    status = RunStatus.BUDGET_EXHAUSTED
    status_index: Optional[int] = None
    limit: Optional[Point] = None
    rising = 0

    for n in range(max_iter):
        x = points[-1]
        nxt = T(x)
        r = space.dist(x, nxt)
        points.append(nxt)
        rho.append(r)
        if r == 0:
            status, status_index, limit = RunStatus.FIXED_POINT_HIT, n, x
            break
        rising = rising + 1 if n > 0 and r > rho[-2] else 0
        if rising >= divergence_window:
            status = RunStatus.DIVERGENCE_SUSPECTED
            break
        if (
            len(rho) >= window
            and all(v < eps for v in rho[-window:])
            and _window_shrinks(space, points[-(window + 1) :], eps)
        ):
            status, limit = RunStatus.CONVERGED, nxt
            break

    logger.debug("picard run from %r: %s after %d steps", x0, status.value, len(rho))
    trace = SequenceTrace(space=space, points=tuple(points), rho=tuple(rho))
    return PicardRun(
        trace=trace, status=status, eps=eps, status_index=status_index, limit=limit
    )


async def picard_runs(
    T: SelfMap, starts: Sequence[Point], eps: float, max_iter: int
) -> List[PicardRun]:
    """Independent runs from each start in worker threads, in start order."""
    results: List[Optional[PicardRun]] = [None] * len(starts)

    async def _one(i: int, x0: Point) -> None:
        results[i] = await anyio.to_thread.run_sync(
            picard_iterate, T, x0, eps, max_iter
        )

    async with anyio.create_task_group() as tg:
        for i, x0 in enumerate(starts):
            tg.start_soon(_one, i, x0)
    return [r for r in results if r is not None]


PhiEvaluator = Callable[[float], SeriesResult]


def hyers_ulam_bound(Phi: PhiEvaluator, d_x_Tx: float) -> float:
    """
    Phi(d(x, Tx)), an upper bound on d(x, z) for the fixed point z.

    Raises:
        SeriesNotConvergent: If the series is not converged at d_x_Tx.
    """
    if d_x_Tx == 0:
        return 0.0
    result = Phi(d_x_Tx)
    if result.status is not SeriesStatus.CONVERGED:
        raise SeriesNotConvergent(
            f"Phi({d_x_Tx:g}) is {result.status.value} after {result.truncated_at} terms"
        )
    return result.bound


def hyers_ulam_profile(
    run: PicardRun, phi: ComparisonFunction
) -> List[Optional[float]]:
    """Per-iterate bounds Phi(rho_n); None where the series did not converge."""
    profile: List[Optional[float]] = []
    for r in run.trace.rho:
        try:
            profile.append(hyers_ulam_bound(phi.series, r))
        except SeriesNotConvergent:
            profile.append(None)
    return profile


def hyers_ulam_certificate(run: PicardRun, phi: ComparisonFunction) -> HyersUlamCertificate:
    """Bound on the distance from the start to the fixed point."""
    residual = run.trace.rho[0] if run.trace.rho else 0.0
    return HyersUlamCertificate(residual=residual, bound=hyers_ulam_bound(phi.series, residual))


def tail_bound_regular(
    run: PicardRun,
    F: WardowskiFunction,
    a: float,
    k: float,
    beta: Optional[float] = None,
) -> TailBoundCertificate:
    """
    Certify rho_n <= (beta / (a n))^(1/k) beyond a rank for a k-regular F.

    A run hitting a fixed point at index 0 gets the trivial certificate.

    Raises:
        RankNotFound: If no rank works on the recorded prefix.
    """
    rho = run.positive_rho
    if not rho:
        return TailBoundCertificate(
            k=k, beta=beta or 0.0, a=a, from_rank=0, checked_until=-1,
            holds_on_prefix=True, tail_sum_bound=0.0,
        )
    return tail_bound_orbit(rho, F, a, k, beta)


def telescopic_certificate(run: PicardRun, window: int = TELE_WINDOW) -> TeleSumCertificate:
    """
    Partial sum of rho plus a geometric tail estimate when the last ratios
    rho_{n+1}/rho_n stay below some r < 1.
    """
    if len(run.trace) < 2:
        raise PreconditionViolated("telescopic certificate needs at least 2 iterates")
    partial = tele_sum(run.trace)
    if run.status is RunStatus.FIXED_POINT_HIT:
        return TeleSumCertificate(partial=partial, tail_estimate=0.0)
    ratio = geometric_ratio(run.trace.rho, window)
    if ratio is None:
        return TeleSumCertificate(partial=partial)
    last = run.trace.rho[-1]
    return TeleSumCertificate(
        partial=partial, tail_estimate=last * ratio / (1.0 - ratio), ratio=ratio
    )


def verdict_from_runs(T: SelfMap, runs: Sequence[PicardRun], eps: float) -> OperatorVerdict:
    statuses = [run.status for run in runs]
    picard = all(s in (RunStatus.CONVERGED, RunStatus.FIXED_POINT_HIT) for s in statuses)
    limits = [run.limit for run in runs]
    strong = picard and all(T.space.dist(z, T(z)) <= eps for z in limits)
    globally = strong and all(
        T.space.dist(z, w) <= eps for z, w in combinations(limits, 2)
    )
    tele = picard and all(
        telescopic_certificate(run).tail_estimate is not None for run in runs
    )
    return OperatorVerdict(
        picard=picard,
        strong=strong,
        globally_strong=globally,
        tele=tele,
        limits=[None if z is None else plain(z) for z in limits],
        statuses=statuses,
    )


def classify_operator(
    T: SelfMap, starts: Sequence[Point], eps: float, max_iter: int
) -> OperatorVerdict:
    """
    Picard evidence from several starts.

    Picard when every run converges or hits a fixed point; strong when each
    limit z has d(z, Tz) <= eps; globally strong when the limits also agree
    pairwise within eps; tele when every run carries a finite tail estimate.
    """
    if len(starts) < 2:
        raise PreconditionViolated("classify_operator needs at least 2 starts")
    runs = anyio.run(picard_runs, T, list(starts), eps, max_iter)
    verdict = verdict_from_runs(T, runs, eps)
    logger.info("%s from %d starts: %s", T.name, len(starts), verdict.label)
    return verdict
