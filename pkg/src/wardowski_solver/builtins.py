"""
Named spaces and self-maps that configs and the CLI can refer to.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Sequence

import numpy as np

from .exceptions import InvalidParameter
from .interfaces import IMetricSpace, Point
from .metric_space import EuclideanSpace, FiniteMetricSpace, RealLine
from .solver import SelfMap

logger = logging.getLogger(__name__)


def _real(**params: Any) -> IMetricSpace:
    if params:
        raise InvalidParameter(f"space 'real' takes no parameters, got {sorted(params)}", "params")
    return RealLine()


def _euclidean(dim: int = 2) -> IMetricSpace:
    if int(dim) != dim or dim < 1:
        raise InvalidParameter(f"dim must be a positive integer, got {dim}", "dim")
    return EuclideanSpace(int(dim))


def _finite(
    matrix: Optional[Sequence[Sequence[float]]] = None,
    matrix_file: Optional[str] = None,
    base_dir: Optional[Path] = None,
) -> IMetricSpace:
    if (matrix is None) == (matrix_file is None):
        raise InvalidParameter("finite space needs exactly one of matrix, matrix_file", "matrix")
    if matrix_file is not None:
        path = Path(matrix_file)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return FiniteMetricSpace.from_file(path)
    return FiniteMetricSpace(np.asarray(matrix, dtype=float))


SPACES: Dict[str, Callable[..., IMetricSpace]] = {
    "real": _real,
    "euclidean": _euclidean,
    "finite": _finite,
}


def make_space(
    name: str, params: Optional[Mapping[str, Any]] = None, base_dir: Optional[Path] = None
) -> IMetricSpace:
    """
    Build a registered space.

    Raises:
        InvalidParameter: Unknown name or bad parameters.
        InvalidMetric: A finite matrix violates a metric axiom.
    """
    if name not in SPACES:
        raise InvalidParameter(f"unknown space {name!r}; known: {sorted(SPACES)}", "name")
    kwargs = dict(params or {})
    if name == "finite":
        kwargs["base_dir"] = base_dir
    try:
        return SPACES[name](**kwargs)
    except TypeError as e:
        raise InvalidParameter(f"bad parameters for space {name}: {e}", "params") from e


def _require_finite(space: IMetricSpace, map_name: str) -> FiniteMetricSpace:
    if not isinstance(space, FiniteMetricSpace):
        raise InvalidParameter(f"map {map_name!r} needs a finite space", "space")
    return space


def _scale(space: IMetricSpace, factor: float = 0.5, center: Any = 0.0) -> SelfMap:
    if isinstance(space, FiniteMetricSpace):
        raise InvalidParameter("map 'scale' needs a real or Euclidean space", "space")
    c = space.coerce_point(center) if not np.isscalar(center) else center
    return SelfMap(
        space=space,
        apply=lambda x: c + factor * (x - c),
        name=f"scale({factor})",
    )


def _affine(space: IMetricSpace, factor: float, shift: float = 0.0) -> SelfMap:
    if isinstance(space, FiniteMetricSpace):
        raise InvalidParameter("map 'affine' needs a real or Euclidean space", "space")
    return SelfMap(space=space, apply=lambda x: factor * x + shift, name=f"affine({factor}, {shift})")


def _translate(space: IMetricSpace, shift: float = 1.0) -> SelfMap:
    return _affine(space, 1.0, shift)


def _identity(space: IMetricSpace) -> SelfMap:
    return SelfMap(space=space, apply=lambda x: x, name="identity")


def _constant(space: IMetricSpace, value: Any) -> SelfMap:
    point = space.coerce_point(value)
    return SelfMap(space=space, apply=lambda x: point, name=f"constant({value})")


def _table(space: IMetricSpace, images: Sequence[int]) -> SelfMap:
    finite = _require_finite(space, "table")
    if len(images) != len(finite):
        raise InvalidParameter(
            f"table needs {len(finite)} images, got {len(images)}", "images"
        )
    table = tuple(finite.coerce_point(i) for i in images)
    return SelfMap(space=space, apply=lambda i: table[int(i)], name=f"table{list(table)}")


MAPS: Dict[str, Callable[..., SelfMap]] = {
    "scale": _scale,
    "affine": _affine,
    "translate": _translate,
    "identity": _identity,
    "constant": _constant,
    "table": _table,
}


def make_map(name: str, space: IMetricSpace, params: Optional[Mapping[str, Any]] = None) -> SelfMap:
    """
    Build a registered self-map of `space`.

    Raises:
        InvalidParameter: Unknown name, bad parameters, or a map that does not
            fit the space.
    """
    if name not in MAPS:
        raise InvalidParameter(f"unknown map {name!r}; known: {sorted(MAPS)}", "name")
    try:
        return MAPS[name](space, **dict(params or {}))
    except (TypeError, ValueError) as e:
        raise InvalidParameter(f"bad parameters for map {name}: {e}", "params") from e


def coerce_points(space: IMetricSpace, raw: Sequence[Any]) -> list[Point]:
    """Config start values as points of `space`."""
    try:
        return [space.coerce_point(v) for v in raw]
    except (TypeError, ValueError) as e:
        raise InvalidParameter(f"bad start point for {space.name}: {e}", "starts") from e
