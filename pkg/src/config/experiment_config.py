import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from src.config.config_manager import config_manager
from src.core.errors import ConfigError

logger = logging.getLogger(__name__)

FIELD_KINDS = ("pitchfork", "constant")
BOUNDARY_KINDS = ("ghost", "identity_rows")
RULES = ("geometric", "harmonic")

_MISSING = object()


def _lookup(data: Mapping[str, Any], path: str, default: Any = _MISSING) -> Any:
    value: Any = data
    for part in path.split("."):
        if not isinstance(value, Mapping) or part not in value:
            if default is _MISSING:
                raise ConfigError("Missing required field", path)
            return default
        value = value[part]
    return value


def _typed(value: Any, kind: type, path: str) -> Any:
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"Expected an integer, got {value!r}", path)
    if not isinstance(value, kind):
        raise ConfigError(f"Expected {kind.__name__}, got {value!r}", path)
    return value


def _range(value: Any, path: str) -> Optional[Tuple[int, int]]:
    if value is None:
        return None
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in value) or value[0] > value[1]):
        raise ConfigError(f"Expected an inclusive [low, high] integer range, got {value!r}", path)
    return int(value[0]), int(value[1])


@dataclass(frozen=True)
class InstanceSpec:
    ell: int
    field: str = "pitchfork"
    L: float = 1.0
    F: int = 1
    beta: float = 2.0
    k_bg: float = 1e-4
    k: float = 1.0
    rule: str = "harmonic"
    boundary: str = "ghost"
    identity_rows: Tuple[int, ...] = ()


@dataclass(frozen=True)
class ExperimentSpec:
    tolerance: float = 1e-8
    shots: int = 1_000_000
    draws: int = 20
    sites: int = 4
    ell_range: Optional[Tuple[int, int]] = None
    refinement_steps: int = 1
    region: Optional[Tuple[int, int, int]] = None
    random_pairs: int = 1000
    fields_range: Optional[Tuple[int, int]] = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a CLI run depends on; identical configs and seeds give identical outputs."""

    instance: InstanceSpec
    experiment: ExperimentSpec = field(default_factory=ExperimentSpec)
    seed: int = 0
    source: Optional[str] = None

    def with_seed(self, seed: Optional[int]) -> "ExperimentConfig":
        if seed is None:
            return self
        return ExperimentConfig(self.instance, self.experiment, int(seed), self.source)

    def with_ell(self, ell: int) -> "InstanceSpec":
        values = asdict(self.instance)
        values["ell"] = ell
        return InstanceSpec(**values)

    def ell_values(self) -> List[int]:
        if self.experiment.ell_range is None:
            return [self.instance.ell]
        low, high = self.experiment.ell_range
        return list(range(low, high + 1))

    def to_dict(self) -> Dict[str, Any]:
        return {"instance": asdict(self.instance), "experiment": asdict(self.experiment), "seed": self.seed}


def _parse_instance(data: Mapping[str, Any]) -> InstanceSpec:
    ell = _typed(_lookup(data, "instance.ell"), int, "instance.ell")
    if ell < 0:
        raise ConfigError(f"Level must be nonnegative, got {ell}", "instance.ell")
    kind = _typed(_lookup(data, "instance.field", config_manager.get("INSTANCE", "field", fallback="pitchfork")),
                  str, "instance.field")
    if kind not in FIELD_KINDS:
        raise ConfigError(f"Unknown field kind {kind!r}; expected one of {FIELD_KINDS}", "instance.field")
    F = _typed(_lookup(data, "instance.F") if kind == "pitchfork" else _lookup(data, "instance.F", 1),
               int, "instance.F")
    rule = _typed(_lookup(data, "instance.rule", config_manager.get("INSTANCE", "rule", fallback="harmonic")),
                  str, "instance.rule").lower()
    if rule not in RULES:
        raise ConfigError(f"Unknown interface rule {rule!r}; expected one of {RULES}", "instance.rule")
    boundary = _typed(_lookup(data, "instance.boundary", config_manager.get("INSTANCE", "boundary", fallback="ghost")),
                      str, "instance.boundary")
    if boundary not in BOUNDARY_KINDS:
        raise ConfigError(f"Unknown boundary {boundary!r}; expected one of {BOUNDARY_KINDS}", "instance.boundary")
    rows = _lookup(data, "instance.identity_rows", [])
    if not isinstance(rows, list) or not all(isinstance(r, int) for r in rows):
        raise ConfigError("Expected a list of cell indices", "instance.identity_rows")

    floats = {}
    for name, default in (("L", 1.0), ("beta", 2.0), ("k_bg", 1e-4), ("k", 1.0)):
        path = f"instance.{name}"
        floats[name] = _typed(_lookup(data, path, config_manager.get_float("INSTANCE", name, fallback=default)),
                              float, path)
        if floats[name] <= 0:
            raise ConfigError(f"Expected a positive value, got {floats[name]}", path)
    return InstanceSpec(ell=ell, field=kind, F=F, rule=rule, boundary=boundary, identity_rows=tuple(rows), **floats)


def _parse_experiment(data: Mapping[str, Any]) -> ExperimentSpec:
    tolerance = _typed(_lookup(data, "experiment.tolerance", config_manager.tolerance()), float, "experiment.tolerance")
    ints = {}
    for name, default in (("shots", 1_000_000), ("draws", 20), ("sites", 4), ("random_pairs", 1000),
                          ("refinement_steps", 1)):
        path = f"experiment.{name}"
        value = _typed(_lookup(data, path, config_manager.get_int("EXPERIMENTS", name, fallback=default)), int, path)
        if value < (0 if name == "refinement_steps" else 1):
            raise ConfigError(f"Value {value} out of range", path)
        ints[name] = value
    region = _lookup(data, "experiment.region", None)
    if region is not None:
        if not isinstance(region, list) or len(region) != 3 or not all(isinstance(v, int) for v in region):
            raise ConfigError(f"Expected a cell [i, j, k], got {region!r}", "experiment.region")
        region = tuple(region)
    return ExperimentSpec(
        tolerance=tolerance, region=region,
        ell_range=_range(_lookup(data, "experiment.ell_range", None), "experiment.ell_range"),
        fields_range=_range(_lookup(data, "experiment.fields_range", None), "experiment.fields_range"),
        **ints,
    )


def parse_config(data: Mapping[str, Any], source: Optional[str] = None) -> ExperimentConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("Configuration must be a JSON object")
    seed = _typed(_lookup(data, "seed", 0), int, "seed")
    if seed < 0:
        raise ConfigError(f"Seed must be nonnegative, got {seed}", "seed")
    return ExperimentConfig(_parse_instance(data), _parse_experiment(data), seed, source)


def load_experiment_config(path: str) -> ExperimentConfig:
    """
    Reads an experiment configuration from a JSON file.

    Raises:
        ConfigError: The file is missing, not JSON, or a field is missing or malformed.
    """
    if not os.path.exists(path):
        raise ConfigError(f"Configuration file '{path}' not found")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"'{path}' is not valid JSON: {e}") from e
    config = parse_config(data, source=path)
    logger.info(f"Loaded experiment configuration from '{path}': ell={config.instance.ell}, "
                f"field={config.instance.field}, seed={config.seed}")
    return config
