"""
Experiment config loading.

A config file is YAML holding one experiment mapping or `experiments: [...]`.
Sections may be written nested or as flat dotted keys (`F.family: log`);
dotted keys are expanded before validation. Unknown keys are rejected.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .builtins import coerce_points, make_map, make_space
from .exceptions import ConfigParseError, ConfigSemanticError, InvalidMetric, InvalidParameter
from .interfaces import IMetricSpace, Point
from .models import CheckMode, ConditionKind
from .solver import SelfMap
from .wardowski import WardowskiFunction, make_family

logger = logging.getLogger(__name__)

Stage = Literal["verify", "derive-phi", "solve", "classify"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpaceSection(_Section):
    name: str = Field("real", description="Registered space name")
    params: Dict[str, Any] = Field(default_factory=dict, description="Constructor parameters")


class MapSection(_Section):
    name: str = Field("scale", description="Registered map name")
    params: Dict[str, Any] = Field(default_factory=dict, description="Constructor parameters")


class FSection(_Section):
    family: str = Field("log", description="Wardowski family name")
    params: Dict[str, Any] = Field(default_factory=dict, description="Family parameters")


class VerifySection(_Section):
    condition: ConditionKind = Field(ConditionKind.AF, description="Condition to check")
    mode: Literal["exhaustive", "sampled"] = Field("sampled", description="Pair selection")
    count: int = Field(1000, ge=1, description="Sampled pair count")
    seed: Optional[int] = Field(None, description="Sampling seed; defaults to the experiment seed")
    box: Optional[Tuple[float, float]] = Field(None, description="Sampling box for unbounded spaces")


class ExperimentConfig(_Section):
    """One experiment: a space, a self-map, a Wardowski function and the stages to run."""

    name: str = Field("experiment", description="Experiment name, used for report files")
    space: SpaceSection = Field(default_factory=SpaceSection)
    map: MapSection = Field(default_factory=MapSection)
    F: FSection = Field(default_factory=FSection)
    a: float = Field(math.log(2.0), gt=0, description="Contraction constant")
    k: Optional[float] = Field(None, gt=0, lt=1, description="Regularity exponent for tail bounds")
    beta: Optional[float] = Field(None, gt=0, description="Tail-bound beta; derived from the run when absent")
    eps: float = Field(1e-9, gt=0, description="Convergence scale")
    max_iter: int = Field(1000, ge=1, description="Iteration budget per run")
    starts: List[Any] = Field(default_factory=lambda: [1.0], description="Start points")
    pipeline: List[Stage] = Field(
        default_factory=lambda: ["verify", "solve"], description="Stages, run in the order given"
    )
    verify: VerifySection = Field(default_factory=VerifySection)
    phi_grid: List[float] = Field(
        default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0],
        description="Points t for derive-phi",
    )
    seed: int = Field(0, description="Seed for every random choice")
    csv: bool = Field(False, description="Also write per-iterate CSV files")

    def check_mode(self) -> CheckMode:
        if self.verify.mode == "exhaustive":
            return CheckMode.exhaustive()
        seed = self.seed if self.verify.seed is None else self.verify.seed
        return CheckMode.sampled(self.verify.count, seed, self.verify.box)


@dataclass(frozen=True)
class Experiment:
    """A validated config with its objects built."""

    config: ExperimentConfig
    space: IMetricSpace
    T: SelfMap
    F: WardowskiFunction
    starts: List[Point]


def expand_dotted(raw: Dict[str, Any]) -> Dict[str, Any]:
    """Turn {"a.b": 1} into {"a": {"b": 1}}, recursively."""
    result: Dict[str, Any] = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            value = expand_dotted(value)
        parts = str(key).split(".")
        node = result
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigSemanticError(f"key {key!r} clashes with a scalar", field=key)
            node = child
        leaf = parts[-1]
        if isinstance(node.get(leaf), dict) and isinstance(value, dict):
            node[leaf].update(value)
        elif leaf in node:
            raise ConfigSemanticError(f"key {key!r} given twice", field=key)
        else:
            node[leaf] = value
    return result


def _field_of(error: ValidationError) -> str:
    first = error.errors()[0]
    return ".".join(str(part) for part in first["loc"])


def parse_experiment(raw: Any, index: int = 0) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigSemanticError(f"experiment {index} is not a mapping", field=f"experiments.{index}")
    try:
        return ExperimentConfig.model_validate(expand_dotted(raw))
    except ValidationError as e:
        field = _field_of(e)
        raise ConfigSemanticError(f"invalid value for {field}: {e.errors()[0]['msg']}", field=field) from e


def build_experiment(config: ExperimentConfig, base_dir: Optional[Path] = None) -> Experiment:
    """
    Build the space, map, F and start points a config names.

    Raises:
        ConfigSemanticError: With the offending field.
    """
    try:
        space = make_space(config.space.name, config.space.params, base_dir)
    except (InvalidParameter, InvalidMetric) as e:
        raise ConfigSemanticError(str(e), field="space", value=config.space.name) from e
    except OSError as e:
        raise ConfigSemanticError(f"cannot read matrix file: {e}", field="space.params.matrix_file") from e
    try:
        T = make_map(config.map.name, space, config.map.params)
    except InvalidParameter as e:
        raise ConfigSemanticError(str(e), field="map", value=config.map.name) from e
    try:
        F = make_family(config.F.family, config.F.params)
    except InvalidParameter as e:
        raise ConfigSemanticError(
            str(e),
            field="F.family" if e.parameter == "family" else "F.params",
            value=config.F.family,
        ) from e
    try:
        starts = coerce_points(space, config.starts)
    except InvalidParameter as e:
        raise ConfigSemanticError(str(e), field="starts") from e
    if "classify" in config.pipeline and len(starts) < 2:
        raise ConfigSemanticError("classify needs at least 2 starts", field="starts")
    return Experiment(config=config, space=space, T=T, F=F, starts=starts)


def load_config(
    path: Union[str, Path], seed: Optional[int] = None
) -> List[Experiment]:
    """
    Load, validate and build every experiment of a config file.

    Args:
        path: YAML config file.
        seed: Replaces every experiment seed when given.

    Raises:
        ConfigParseError: Malformed YAML or an empty file.
        ConfigSemanticError: Unknown keys, bad values or unknown names.
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigParseError(f"{path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigParseError(f"{path}: expected a mapping at the top level")
    entries = raw["experiments"] if set(raw) == {"experiments"} else [raw]
    if not isinstance(entries, list) or not entries:
        raise ConfigSemanticError("experiments must be a nonempty list", field="experiments")
    experiments = []
    for i, entry in enumerate(entries):
        config = parse_experiment(entry, i)
        if seed is not None:
            verify = config.verify.model_copy(update={"seed": None})
            config = config.model_copy(update={"seed": seed, "verify": verify})
        experiments.append(build_experiment(config, path.parent))
    names = [e.config.name for e in experiments]
    if len(set(names)) != len(names):
        raise ConfigSemanticError(f"experiment names must be unique, got {names}", field="name")
    logger.info("loaded %d experiment(s) from %s", len(experiments), path)
    return experiments


def parse_spec(text: str) -> Tuple[str, Dict[str, Any]]:
    """
    Parse a command-line spec such as `neg_power:delta=0.5` or
    `table:images=[1,1,2]`; values are read as YAML scalars or lists.
    """
    name, _, rest = text.partition(":")
    params: Dict[str, Any] = {}
    if rest:
        for item in _split_top_level(rest):
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise ConfigSemanticError(f"expected key=value in {text!r}", field=name)
            try:
                params[key.strip()] = yaml.safe_load(value)
            except yaml.YAMLError as e:
                raise ConfigParseError(f"bad value in {text!r}: {e}") from e
    return name.strip(), params


def _split_top_level(text: str) -> List[str]:
    """Split on commas outside brackets."""
    parts, depth, current = [], 0, []
    for ch in text:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return [p for p in parts if p.strip()]
