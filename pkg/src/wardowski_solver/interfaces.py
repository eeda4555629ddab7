"""
This module defines the interfaces (Protocols) shared by the solver
components: the metric-space contract every space must honour and the
self-map contract used by the solver and verifier.
"""

from __future__ import annotations

from typing import Any, Callable, Optional, Protocol, Sequence, runtime_checkable

import numpy as np

Point = Any


@runtime_checkable
class IMetricSpace(Protocol):
    """
    Interface for a metric space.

    Implementations must make `dist` a metric: zero exactly on equal points,
    symmetric, and satisfying the triangle inequality.
    """

    name: str

    def dist(self, x: Point, y: Point) -> float:
        """
        Distance between two points.

        Args:
            x: A point of the space.
            y: A point of the space.

        Returns:
            float: A nonnegative real.
        """
        ...

    def dists_from(self, x: Point, points: Sequence[Point]) -> np.ndarray:
        """
        Distances from `x` to each of `points`, as a float array.
        """
        ...

    def sample_points(
        self,
        rng: np.random.Generator,
        count: int,
        box: Optional[tuple[float, float]] = None,
    ) -> list[Point]:
        """
        Draw `count` points from the space.

        Args:
            rng: Seeded generator; the only source of randomness.
            count: Number of points to draw.
            box: Coordinate range for unbounded spaces.
        """
        ...

    def coerce_point(self, raw: Any) -> Point:
        """
        Convert a config value (number, list, index) to a point of the space.

        Raises:
            ValueError: If `raw` does not name a point of the space.
        """
        ...


@runtime_checkable
class ISelfMap(Protocol):
    """Interface for a total self-map T of a metric space."""

    space: IMetricSpace
    name: str

    def __call__(self, x: Point) -> Point: ...


PointMap = Callable[[Point], Point]
