"""
Metric spaces and sequence diagnostics.

Concrete spaces are the real line, Euclidean n-space and finite spaces given
by a distance matrix. Finite spaces are validated exhaustively at
construction; the others are trusted. `SequenceTrace` records an orbit and its
consecutive distances, and the Cauchy / semi-Cauchy verdicts read it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import InvalidMetric, PreconditionViolated
from .interfaces import IMetricSpace, Point
from .models import CauchyVerdict, SemiCauchyVerdict

logger = logging.getLogger(__name__)

DEFAULT_BOX: Tuple[float, float] = (-10.0, 10.0)
# rho within this relative distance of eps is not "below" eps
RHO_REL_TOL = 1e-9


class RealLine:
    """R with the absolute-value metric."""

    name = "real"

    def dist(self, x: float, y: float) -> float:
        return abs(float(x) - float(y))

    def dists_from(self, x: float, points: Sequence[float]) -> np.ndarray:
        return np.abs(np.asarray(points, dtype=float) - float(x))

    def sample_points(
        self,
        rng: np.random.Generator,
        count: int,
        box: Optional[Tuple[float, float]] = None,
    ) -> list[float]:
        lo, hi = box or DEFAULT_BOX
        return [float(v) for v in rng.uniform(lo, hi, size=count)]

    def coerce_point(self, raw: Any) -> float:
        return float(raw)


class EuclideanSpace:
    """R^dim with the Euclidean norm."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        self.dim = dim
        self.name = f"euclidean{dim}"

    def dist(self, x: Sequence[float], y: Sequence[float]) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))

    def dists_from(self, x: Sequence[float], points: Sequence[Any]) -> np.ndarray:
        arr = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return np.linalg.norm(arr - np.asarray(x, dtype=float), axis=1)

    def sample_points(
        self,
        rng: np.random.Generator,
        count: int,
        box: Optional[Tuple[float, float]] = None,
    ) -> list[np.ndarray]:
        lo, hi = box or DEFAULT_BOX
        return list(rng.uniform(lo, hi, size=(count, self.dim)))

    def coerce_point(self, raw: Any) -> np.ndarray:
        point = np.asarray(raw, dtype=float).reshape(-1)
        if point.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got {raw!r}")
        return point


class FiniteMetricSpace:
    """
    The points 0..n-1 with an explicit distance matrix.

    All metric axioms are checked at construction (O(n^3) for the triangle
    inequality) and any violation raises `InvalidMetric` naming the axiom and
    the first offending indices.
    """

    def __init__(self, matrix: Any, atol: float = 1e-12, name: str = "finite"):
        m = np.asarray(matrix, dtype=float)
        validate_distance_matrix(m, atol=atol)
        m.setflags(write=False)
        self.matrix = m
        self.n = m.shape[0]
        self.name = name

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "FiniteMetricSpace":
        """
        Load a matrix file: first line n, then n rows of n decimals.

        Raises:
            InvalidMetric: If the shape disagrees with n or an axiom fails.
            OSError: If the file cannot be read.
        """
        lines = [
            line.strip()
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        if not lines:
            raise InvalidMetric(f"empty matrix file {path}", axiom="shape")
        try:
            n = int(lines[0])
            rows = [[float(tok) for tok in line.split()] for line in lines[1:]]
        except ValueError as e:
            raise InvalidMetric(f"malformed matrix file {path}: {e}", axiom="shape") from e
        if len(rows) != n or any(len(row) != n for row in rows):
            raise InvalidMetric(
                f"matrix file {path} declares n={n} but holds {len(rows)} rows",
                axiom="shape",
            )
        logger.debug("loaded %dx%d distance matrix from %s", n, n, path)
        return cls(np.array(rows, dtype=float), name=Path(path).stem)

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.n))

    def __len__(self) -> int:
        return self.n

    def dist(self, x: int, y: int) -> float:
        return float(self.matrix[int(x), int(y)])

    def dists_from(self, x: int, points: Sequence[int]) -> np.ndarray:
        return self.matrix[int(x), np.asarray(points, dtype=int)]

    def sample_points(
        self,
        rng: np.random.Generator,
        count: int,
        box: Optional[Tuple[float, float]] = None,
    ) -> list[int]:
        return [int(i) for i in rng.integers(0, self.n, size=count)]

    def coerce_point(self, raw: Any) -> int:
        index = int(raw)
        if not 0 <= index < self.n:
            raise ValueError(f"point index {raw!r} outside 0..{self.n - 1}")
        return index


def validate_distance_matrix(m: np.ndarray, atol: float = 1e-12) -> None:
    """
    Check the metric axioms on a square matrix.

    Raises:
        InvalidMetric: On the first violated axiom, with offending indices.
    """
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvalidMetric(f"distance matrix must be square, got {m.shape}", "shape")
    if not np.all(np.isfinite(m)):
        i, j = np.argwhere(~np.isfinite(m))[0]
        raise InvalidMetric(f"non-finite distance at ({i}, {j})", "finite", (i, j))
    if np.any(m < 0):
        i, j = np.argwhere(m < 0)[0]
        raise InvalidMetric(f"negative distance at ({i}, {j})", "nonnegative", (i, j))
    diag = np.flatnonzero(np.diag(m) != 0)
    if diag.size:
        i = int(diag[0])
        raise InvalidMetric(f"nonzero self-distance at {i}", "identity", (i, i))
    off = m + np.eye(m.shape[0])
    if np.any(off == 0):
        i, j = np.argwhere(off == 0)[0]
        raise InvalidMetric(
            f"distinct points {i} and {j} at distance 0", "identity", (i, j)
        )
    if not np.array_equal(m, m.T):
        i, j = np.argwhere(m != m.T)[0]
        raise InvalidMetric(f"asymmetric entries at ({i}, {j})", "symmetry", (i, j))
    # bad[i, j, k] is d(i, k) > d(i, j) + d(j, k)
    bad = m[:, None, :] > m[:, :, None] + m[None, :, :] + atol
    if np.any(bad):
        i, j, k = np.argwhere(bad)[0]
        raise InvalidMetric(
            f"triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})",
            "triangle",
            (i, j, k),
        )


@dataclass(frozen=True)
class SequenceTrace:
    """An orbit prefix with its consecutive distances rho_n = d(x_n, x_{n+1})."""

    space: IMetricSpace
    points: Tuple[Point, ...]
    rho: Tuple[float, ...] = field(default=())

    @classmethod
    def from_points(cls, space: IMetricSpace, points: Sequence[Point]) -> "SequenceTrace":
        pts = tuple(points)
        rho = tuple(space.dist(pts[i], pts[i + 1]) for i in range(len(pts) - 1))
        return cls(space=space, points=pts, rho=rho)

    def __len__(self) -> int:
        return len(self.points)

    def is_valid(self) -> bool:
        """rho has len(points) - 1 entries, each the recomputed distance."""
        if len(self.rho) != max(len(self.points) - 1, 0):
            return False
        return all(
            self.rho[i] == self.space.dist(self.points[i], self.points[i + 1])
            for i in range(len(self.rho))
        )


def tele_sum(trace: SequenceTrace) -> float:
    """Sum of the recorded consecutive distances."""
    return math.fsum(trace.rho)


def _first_exceedances(trace: SequenceTrace, eps: float) -> list[Optional[int]]:
    """For each m, the least n > m with d(x_m, x_n) > eps, or None."""
    points = trace.points
    result: list[Optional[int]] = []
    for m in range(len(points) - 1):
        d = trace.space.dists_from(points[m], points[m + 1 :])
        hits = np.flatnonzero(d > eps)
        result.append(m + 1 + int(hits[0]) if hits.size else None)
    result.append(None)
    return result


def _least_rank(first_bad: Sequence[Optional[int]], horizon: int) -> int:
    """Least j such that no pair j <= m < n < horizon exceeds eps."""
    rank = 0
    for m in range(horizon):
        n = first_bad[m]
        if n is not None and n < horizon:
            rank = m + 1
    return rank


def cauchy_verdict(trace: SequenceTrace, eps: float) -> CauchyVerdict:
    """
    Cauchy evidence at scale eps over the recorded prefix.

    The rank j is the least index with d(x_m, x_n) <= eps for every recorded
    j <= m < n. CauchyAt needs j to leave at least one checked pair and to be
    settled: cutting the prefix halfway through the tail beyond j may lower
    the rank by at most one. A rank that keeps moving with the horizon (as for
    the harmonic walk) gives NotCauchyAt with the lexicographically least
    pair (m, n) such that d(x_m, x_n) > eps.
    """
    length = len(trace)
    if length < 2:
        raise PreconditionViolated("cauchy_verdict needs at least 2 points")
    first_bad = _first_exceedances(trace, eps)
    full_rank = _least_rank(first_bad, length)
    if full_rank <= length - 2:
        horizon = full_rank + math.ceil((length - full_rank) / 2)
        settled_rank = _least_rank(first_bad, horizon)
        if settled_rank >= full_rank - 1:
            return CauchyVerdict(eps=eps, cauchy=True, rank=full_rank, prefix_length=length)
    else:
        settled_rank = full_rank
    witness = next(
        ((m, n) for m, n in enumerate(first_bad) if n is not None), None
    )
    logger.debug("not Cauchy at %g: ranks %d/%d, witness %s", eps, settled_rank, full_rank, witness)
    return CauchyVerdict(eps=eps, cauchy=False, witness=witness, prefix_length=length)


def _rho_rank(rho: Sequence[float], accept: Callable[[float], bool]) -> int:
    """Least r with accept(rho_n) for every recorded n >= r."""
    rank = 0
    for i, r in enumerate(rho):
        if not accept(r):
            rank = i + 1
    return rank


def semi_cauchy_verdict(trace: SequenceTrace, eps: float) -> SemiCauchyVerdict:
    """
    Semi-Cauchy evidence: rho_n falls below eps and stays there.

    The verdict uses the same test as `cauchy_verdict` (rho_n <= eps), so a
    CauchyAt verdict always comes with a semi-Cauchy one. The reported rank is
    the first index from which rho stays strictly below eps, a rho equal to
    eps up to rounding counting as not below; when the tail sits at eps it is
    the rank from which rho stays at or below eps.
    """
    length = len(trace)
    if length < 2:
        raise PreconditionViolated("semi_cauchy_verdict needs at least 2 points")
    rho = trace.rho
    within_rank = _rho_rank(rho, lambda r: r <= eps)
    holds = within_rank < len(rho)
    rank: Optional[int] = None
    if holds:
        strict_rank = _rho_rank(
            rho, lambda r: r < eps and not math.isclose(r, eps, rel_tol=RHO_REL_TOL)
        )
        rank = strict_rank if strict_rank < len(rho) else within_rank
    return SemiCauchyVerdict(eps=eps, semi_cauchy=holds, rank=rank, prefix_length=length)


def load_trace_csv(path: Union[str, Path], space: Optional[IMetricSpace] = None) -> SequenceTrace:
    """
    Read a trace file: one point per row, one column per coordinate.

    A one-column file is read on the real line, wider files in Euclidean space
    of matching dimension, unless `space` is given.
    """
    data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    if space is None:
        space = RealLine() if data.shape[1] == 1 else EuclideanSpace(data.shape[1])
    if isinstance(space, RealLine):
        points: list[Any] = [float(v) for v in data[:, 0]]
    else:
        points = list(data)
    return SequenceTrace.from_points(space, points)
