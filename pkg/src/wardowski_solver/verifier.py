"""
Contraction checks, the semi-Cauchy witness extractor and the fixed-point
oracle for finite spaces.

Exhaustive checks walk all ordered pairs of a finite space in lexicographic
order; sampled checks draw pairs from `numpy.random.default_rng(seed)`. The
first failing pair in that order is the reported witness.
"""

from __future__ import annotations

import logging
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .comparison import ComparisonFunction
from .exceptions import EtaInDelta, InvalidParameter, PrefixTooShort, PreconditionViolated
from .interfaces import IMetricSpace, ISelfMap, Point
from .metric_space import FiniteMetricSpace, SequenceTrace
from .models import (
    CheckMode,
    ConditionKind,
    ContractionReport,
    PairWitness,
    WitnessExtraction,
)
from .numerics import ext_le
from .solver import plain
from .wardowski import WardowskiFunction

logger = logging.getLogger(__name__)

AF_SLACK = 1e-12


def iter_pairs(space: IMetricSpace, mode: CheckMode) -> Iterator[Tuple[Point, Point]]:
    """Ordered pairs to test under `mode`."""
    if mode.kind == "exhaustive":
        if not isinstance(space, FiniteMetricSpace):
            raise PreconditionViolated(
                f"exhaustive mode needs a finite space, got {space.name}"
            )
        for x in space:
            for y in space:
                yield x, y
        return
    if mode.count is None or mode.count < 1:
        raise InvalidParameter("sampled mode needs a positive pair count", "count")
    rng = np.random.default_rng(mode.seed)
    xs = space.sample_points(rng, mode.count, mode.box)
    ys = space.sample_points(rng, mode.count, mode.box)
    yield from zip(xs, ys)


def _scan(
    T: ISelfMap,
    mode: CheckMode,
    condition: ConditionKind,
    test: Callable[[float, float], Optional[Tuple[float, float]]],
    skip_equal: bool,
    a: Optional[float] = None,
) -> ContractionReport:
    """Run `test(d, dT)` on every pair; it returns (lhs, rhs) on failure."""
    space = T.space
    checked = 0
    witness: Optional[PairWitness] = None
    for x, y in iter_pairs(space, mode):
        d = space.dist(x, y)
        if skip_equal and d == 0:
            continue
        checked += 1
        failure = test(d, space.dist(T(x), T(y)))
        if failure is not None:
            lhs, rhs = failure
            witness = PairWitness(x=plain(x), y=plain(y), lhs=lhs, rhs=rhs)
            logger.info("%s fails for %s at (%r, %r)", condition.value, T.name, x, y)
            break
    return ContractionReport(
        condition=condition,
        a=a,
        mode=mode,
        holds=witness is None,
        witness=witness,
        pairs_checked=checked,
    )


def check_aF_contractive(
    T: ISelfMap,
    F: WardowskiFunction,
    a: float,
    mode: CheckMode,
    slack: Optional[float] = None,
) -> ContractionReport:
    """
    a + F(d(Tx, Ty)) <= F(d(x, y)) for every tested pair with x != y.

    Compared in extended-real arithmetic, so a collapsing pair (d(Tx, Ty) = 0)
    always passes. `slack` is relative to |F(d(x, y))|. It defaults to
    AF_SLACK on the real line and Euclidean spaces and to 0 (exact) on finite
    spaces.
    """
    if not a > 0:
        raise InvalidParameter(f"a must be positive, got {a}", "a")
    if slack is None:
        slack = 0.0 if isinstance(T.space, FiniteMetricSpace) else AF_SLACK

    def test(d: float, d_image: float) -> Optional[Tuple[float, float]]:
        lhs = F(d_image) + a
        rhs = F(d)
        if ext_le(lhs, rhs, slack):
            return None
        return lhs.to_float(), rhs.to_float()

    return _scan(T, mode, ConditionKind.AF, test, skip_equal=True, a=a)


def check_phi_contractive(
    T: ISelfMap,
    phi: ComparisonFunction,
    mode: CheckMode,
    slack: Optional[float] = None,
) -> ContractionReport:
    """d(Tx, Ty) <= phi(d(x, y)) on every tested pair, up to phi's evaluation slack."""
    allowance = phi.slack if slack is None else slack

    def test(d: float, d_image: float) -> Optional[Tuple[float, float]]:
        rhs = phi(d)
        return None if d_image <= rhs + allowance else (d_image, rhs)

    return _scan(T, mode, ConditionKind.PHI, test, skip_equal=False)


def check_strict_and_nonexpansive(
    T: ISelfMap, mode: CheckMode
) -> Tuple[ContractionReport, ContractionReport]:
    """Strict contraction over x != y and nonexpansiveness over all pairs."""

    def strict(d: float, d_image: float) -> Optional[Tuple[float, float]]:
        return None if d_image < d else (d_image, d)

    def nonexpansive(d: float, d_image: float) -> Optional[Tuple[float, float]]:
        return None if d_image <= d else (d_image, d)

    return (
        _scan(T, mode, ConditionKind.STRICT, strict, skip_equal=True),
        _scan(T, mode, ConditionKind.NONEXPANSIVE, nonexpansive, skip_equal=False),
    )


class _Exceedances:
    """Lazy first exceedance n > m with d(x_m, x_n) > eta, per m."""

    def __init__(self, trace: SequenceTrace, eta: float):
        self.trace = trace
        self.eta = eta
        self._cache: Dict[int, Optional[int]] = {}

    def __call__(self, m: int) -> Optional[int]:
        if m not in self._cache:
            points = self.trace.points
            d = self.trace.space.dists_from(points[m], points[m + 1 :])
            hits = np.flatnonzero(d > self.eta)
            self._cache[m] = m + 1 + int(hits[0]) if hits.size else None
        return self._cache[m]


def _mean_last_quarter(values: Sequence[float]) -> float:
    if not values:
        return float("nan")
    tail = values[len(values) - max(1, len(values) // 4) :]
    return float(np.mean(tail))


def extract_witness(
    trace: SequenceTrace,
    eta: float,
    delta: Sequence[float] = (),
    j_max: Optional[int] = None,
) -> WitnessExtraction:
    """
    Rank sequences m(j) < n(j) of a semi-Cauchy sequence that is not Cauchy.

    m(j) is the least m >= j with some n > m and d(x_m, x_n) > eta on the
    prefix, n(j) the least such n. Without `j_max` every j with a nonempty
    pair set is extracted.

    Checks "exceeds_eta" (d(x_m(j), x_n(j)) > eta for all j) and "first_exit"
    (n(j) - m(j) >= 2 and d(x_m(j), x_{n(j)-1}) <= eta for j >= j_eta) are
    exact. Trends "overshoot" (mean of d(x_m(j), x_n(j)) - eta) and "shift_pq"
    (mean of |d(x_{m(j)+p}, x_{n(j)+q}) - eta|) cover the last quarter of j.

    Raises:
        EtaInDelta: If eta is one of the excluded scales.
        PrefixTooShort: If the pair set is empty for a requested j.
    """
    if not eta > 0:
        raise InvalidParameter(f"eta must be positive, got {eta}", "eta")
    if eta in delta:
        raise EtaInDelta(f"eta={eta} lies in the excluded set")
    points = trace.points
    space = trace.space
    exceed = _Exceedances(trace, eta)

    m_seq: List[int] = []
    n_seq: List[int] = []
    m = 0
    j = 0
    while j_max is None or j <= j_max:
        m = max(m, j)
        while m < len(points) - 1 and exceed(m) is None:
            m += 1
        if m >= len(points) - 1:
            if j_max is not None or j == 0:
                raise PrefixTooShort(f"no pair beyond rank {j} exceeds eta={eta}", j)
            break
        m_seq.append(m)
        n_seq.append(exceed(m))  # type: ignore[arg-type]
        j += 1

    rho = trace.rho
    j_eta = 0
    for i, r in enumerate(rho):
        if not r < eta:
            j_eta = i + 1
    overshoot = [space.dist(points[m], points[n]) for m, n in zip(m_seq, n_seq)]
    checks = {
        "exceeds_eta": all(d > eta for d in overshoot),
        "first_exit": all(
            n - m >= 2 and space.dist(points[m], points[n - 1]) <= eta
            for j, (m, n) in enumerate(zip(m_seq, n_seq))
            if j >= j_eta
        ),
        "monotone_ranks": all(m >= j for j, m in enumerate(m_seq))
        and all(b >= a for a, b in zip(m_seq, m_seq[1:])),
    }

    quarter = len(m_seq) - max(1, len(m_seq) // 4)
    trend = {"overshoot": _mean_last_quarter([d - eta for d in overshoot])}
    for p in (0, 1):
        for q in (0, 1):
            shifted = [
                abs(space.dist(points[m + p], points[n + q]) - eta)
                for m, n in zip(m_seq[quarter:], n_seq[quarter:])
                if n + q < len(points)
            ]
            trend[f"shift_{p}{q}"] = float(np.mean(shifted)) if shifted else float("nan")

    if not all(checks.values()):
        logger.warning("witness extraction at eta=%g failed checks %s", eta, checks)
    return WitnessExtraction(
        eta=eta,
        j_eta=j_eta if j_eta < len(rho) else None,
        m_seq=m_seq,
        n_seq=n_seq,
        checks=checks,
        trend=trend,
    )


def propose_eta(delta: Sequence[float], lo: float, hi: float) -> float:
    """Midpoint of the largest gap of `delta` inside [lo, hi]."""
    if not 0 < lo < hi:
        raise InvalidParameter(f"need 0 < lo < hi, got [{lo}, {hi}]", "lo")
    cuts = sorted({lo, hi, *(d for d in delta if lo < d < hi)})
    gaps = [(b - a, (a + b) / 2.0) for a, b in zip(cuts, cuts[1:])]
    return max(gaps)[1]


def brute_force_fixed_points(
    space: FiniteMetricSpace, T: Union[Callable[[int], int], Sequence[int]]
) -> Set[int]:
    """Exact fixed-point set {i : T(i) = i} of a map on 0..n-1."""
    image = T if callable(T) else (lambda i: T[i])
    return {i for i in space if image(i) == i}
