"""Experiment configuration: typed dataclasses loaded from YAML with field-path errors."""
from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .dynamic.model import ModelConfig
from .dynamic.train import PhaseConfig, TrainConfig
from .errors import ConfigError
from .sindy import LibrarySpec
from .synth import system_from_dict

PRESET_DIR = Path(__file__).parent / "presets"


@dataclass
class SimulationConfig:
    system: Dict[str, Any]
    x0: List[float]
    dt: float = 0.01
    n_steps: int = 1000
    method: str = "rk4"
    n_traj: int = 1
    x0_jitter_std: float = 0.1
    t0: float = 0.0
    noise_std: float = 0.0
    coefficient_noise_std: float = 0.0  # per-trajectory Gaussian noise on the coefficient schedules

    def __post_init__(self):
        if self.method not in ("rk4", "euler"):
            raise ValueError(f"method must be rk4 or euler, got {self.method!r}")
        if self.dt <= 0 or self.n_steps < 2 or self.n_traj < 1:
            raise ValueError("need dt > 0, n_steps >= 2, n_traj >= 1")
        if min(self.noise_std, self.x0_jitter_std, self.coefficient_noise_std) < 0:
            raise ValueError("noise_std, x0_jitter_std and coefficient_noise_std must be non-negative")


@dataclass
class StlsqConfig:
    threshold: float = 0.1
    max_iters: int = 20


@dataclass
class GroupConfig:
    algorithm: str = "simple"   # simple | ght
    window_len: int = 50
    threshold: float = 0.1      # simple
    gamma: float = 0.01         # ght
    tol: float = 1e-8
    max_iters: int = 500
    trajectory: int = 0
    library: Optional[LibrarySpec] = None  # None: the experiment library

    def __post_init__(self):
        if self.algorithm not in ("simple", "ght"):
            raise ValueError(f"algorithm must be simple or ght, got {self.algorithm!r}")


@dataclass
class DynamicConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainConfig = field(default_factory=lambda: TrainConfig([PhaseConfig(0)]))
    n_samples: int = 0


@dataclass
class LatentConfig:
    """Hidden-variable discovery: which state dimensions are observed and how to close the system."""

    observed: List[int] = field(default_factory=lambda: [0])
    library: LibrarySpec = field(default_factory=lambda: LibrarySpec(3, include_bias=False))
    term: str = "x0"
    equation: int = 0
    q: float = 1.0
    alpha: Optional[float] = None
    beta: Optional[float] = None
    closure_library: LibrarySpec = field(default_factory=lambda: LibrarySpec(2))
    closure_threshold: float = 0.05
    smooth_window: int = 1


@dataclass
class ExperimentConfig:
    name: str
    simulation: SimulationConfig
    library: LibrarySpec = field(default_factory=LibrarySpec)
    derivatives: str = "exact"  # exact | central
    seed: int = 0
    stlsq: StlsqConfig = field(default_factory=StlsqConfig)
    group: GroupConfig = field(default_factory=GroupConfig)
    dynamic: DynamicConfig = field(default_factory=DynamicConfig)
    latent: Optional[LatentConfig] = None

    def __post_init__(self):
        if self.derivatives not in ("exact", "central"):
            raise ValueError(f"derivatives must be exact or central, got {self.derivatives!r}")

    def system(self):
        return system_from_dict(self.simulation.system)


# -- dict <-> dataclass --------------------------------------------------------

def _fail(path, message):
    raise ConfigError(path or "<root>", message)


def _convert(tp, value, path):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if tp is Any:
        return value
    if origin is typing.Union:
        inner = [a for a in args if a is not type(None)]
        if value is None:
            if type(None) in args:
                return None
            _fail(path, "must not be null")
        return _convert(inner[0], value, path)
    if value is None:
        _fail(path, "must not be null")
    if dataclasses.is_dataclass(tp):
        return from_dict(tp, value, path)
    if origin in (list, List):
        if not isinstance(value, (list, tuple)):
            _fail(path, f"expected a list, got {type(value).__name__}")
        return [_convert(args[0], v, f"{path}[{i}]") for i, v in enumerate(value)]
    if origin in (tuple, Tuple):
        if not isinstance(value, (list, tuple)):
            _fail(path, f"expected a list, got {type(value).__name__}")
        return tuple(_convert(args[0], v, f"{path}[{i}]") for i, v in enumerate(value))
    if origin in (dict, Dict):
        if not isinstance(value, dict):
            _fail(path, f"expected a mapping, got {type(value).__name__}")
        return dict(value)
    if tp is bool:
        if not isinstance(value, bool):
            _fail(path, f"expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(path, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(path, f"expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            _fail(path, f"expected a string, got {value!r}")
        return value
    return value


def from_dict(cls, data, path: str = ""):
    """Build dataclass ``cls`` from a plain mapping, reporting errors by field path."""
    if not isinstance(data, dict):
        _fail(path, f"expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        _fail(f"{path}.{unknown[0]}" if path else unknown[0], "unknown field")
    kwargs = {}
    for name, f in names.items():
        sub = f"{path}.{name}" if path else name
        if name not in data:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                _fail(sub, "required field missing")
            continue
        kwargs[name] = _convert(hints[name], data[name], sub)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        _fail(path, str(exc))


def to_dict(obj):
    """Plain-data tree (lists, dicts, scalars) for any config dataclass."""
    if dataclasses.is_dataclass(obj):
        return {f.name: to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [to_dict(v) for v in obj]
    if isinstance(obj, dict):
        return {k: to_dict(v) for k, v in obj.items()}
    return obj


def parse_config(data) -> ExperimentConfig:
    cfg = from_dict(ExperimentConfig, data)
    try:
        system = cfg.system()
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError("simulation.system", str(exc)) from None
    if len(cfg.simulation.x0) != system.dim:
        raise ConfigError("simulation.x0", f"expected {system.dim} entries for {system.kind}")
    return cfg


def load_config(path) -> ExperimentConfig:
    """Load a YAML file, or a bundled preset when ``path`` names one."""
    p = Path(path)
    if not p.exists() and (PRESET_DIR / f"{path}.yaml").exists():
        p = PRESET_DIR / f"{path}.yaml"
    if not p.exists():
        raise FileNotFoundError(f"config {path} not found (and no preset of that name)")
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "<yaml>"
        raise ConfigError(where, f"YAML parse error in {p}: {exc}") from None
    return parse_config(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)


def list_presets() -> List[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))
