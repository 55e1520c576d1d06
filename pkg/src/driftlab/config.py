"""Run configuration: JSON schema, validation, and dotted overrides.

A run is fully described by one JSON object (see default_config for every
field and its default). Loading rejects unknown keys at any nesting
level, naming the offending dotted path, so typos fail fast instead of
silently training with defaults.

Override syntax, used by the command line as `--set dotted.key=value`:
values are parsed as JSON when possible (numbers, true/false/null,
[lists], "strings") and fall back to bare strings, so
`--set plan.k=1 --set dataset.kind=two-moons --set drift.tau=[0.3,1.0]`
all work without quoting gymnastics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

from .checkpoint import atomic_write_bytes
from .datasets import ToySpec
from .kernel import DriftConfig
from .lookahead import LookaheadPlan

__all__ = [
    "ConfigError",
    "OptimizerSettings",
    "RunConfig",
    "default_config",
    "config_to_dict",
    "config_from_dict",
    "load_config",
    "save_config",
    "apply_overrides",
]

METHODS = ("lookahead", "standard")


class ConfigError(ValueError):
    """A configuration file or override that cannot be accepted."""


@dataclass(frozen=True)
class OptimizerSettings:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if not self.lr > 0:
            raise ConfigError(f"optimizer.lr must be > 0, got {self.lr}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError(f"optimizer betas must be in [0, 1), got {self.beta1}, {self.beta2}")
        if not self.eps > 0:
            raise ConfigError(f"optimizer.eps must be > 0, got {self.eps}")


@dataclass(frozen=True)
class RunConfig:
    """Everything a training run depends on; see module docstring."""

    seed: int = 1
    steps: int = 20000
    method: str = "lookahead"
    out_dir: str = "runs/default"
    noise_dim: int = 2
    data_dim: int = 2
    hidden: tuple[int, ...] = (256, 256, 256)
    activation: str = "silu"
    batch_size_model: int = 256
    batch_size_data: int = 256
    eval_every: int = 1000
    checkpoint_every: int = 5000
    eval_size: int = 4096
    projections: int = 128
    eval_use_ema: bool = True
    ema_decay: float = 0.999
    dataset: ToySpec = field(default_factory=ToySpec)
    plan: LookaheadPlan = field(default_factory=LookaheadPlan)
    drift: DriftConfig = field(default_factory=lambda: DriftConfig(tau=0.3))
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        for name in ("steps", "noise_dim", "data_dim", "batch_size_model", "batch_size_data",
                     "eval_every", "checkpoint_every", "projections"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.eval_size < 2:
            raise ConfigError(f"eval_size must be >= 2, got {self.eval_size}")
        if self.data_dim != 2:
            raise ConfigError(f"toy datasets are 2-D; data_dim must be 2, got {self.data_dim}")
        if not 0.0 <= self.ema_decay < 1.0:
            raise ConfigError(f"ema_decay must be in [0, 1), got {self.ema_decay}")
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"hidden sizes must be >= 1, got {self.hidden}")
        if not self.out_dir:
            raise ConfigError("out_dir must be nonempty")

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.noise_dim, *self.hidden, self.data_dim)


def default_config() -> RunConfig:
    return RunConfig()


def _scalar(v):
    if isinstance(v, tuple):
        return list(v)
    return v


def config_to_dict(cfg: RunConfig) -> dict:
    """JSON-ready nested dict; tuples become lists.

    All-ones lookahead weights are the defaults implied by k, so they
    serialize as null; that keeps `--set plan.k=...` free of stale
    weight-length conflicts.
    """
    out: dict = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name in ("dataset", "plan", "drift", "optimizer"):
            out[f.name] = {g.name: _scalar(getattr(v, g.name)) for g in fields(v)}
        else:
            out[f.name] = _scalar(v)
    if all(w == 1.0 for w in cfg.plan.weights):
        out["plan"]["weights"] = None
    return out


def _build(cls, data: dict, path: str, casts: dict | None = None):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be an object, got {type(data).__name__}")
    allowed = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        dotted = f"{path}.{key}" if path else key
        if key not in allowed:
            raise ConfigError(f"unknown config key: {dotted}")
        if casts and key in casts:
            value = casts[key](value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value under {path or 'config'}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    """Validate a nested dict into a RunConfig, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    top = dict(data)
    nested = {}
    for name, cls, casts in (
        ("dataset", ToySpec, None),
        ("plan", LookaheadPlan, {"weights": lambda w: tuple(w) if w is not None else None}),
        ("drift", DriftConfig, {"tau": lambda t: tuple(t) if isinstance(t, list) else t}),
        ("optimizer", OptimizerSettings, None),
    ):
        if name in top:
            nested[name] = _build(cls, top.pop(name), name, casts)
    return _assemble(top, nested)


def _assemble(top: dict, nested: dict) -> RunConfig:
    allowed = {f.name for f in fields(RunConfig)}
    for key in top:
        if key not in allowed:
            raise ConfigError(f"unknown config key: {key}")
    kwargs = dict(top)
    if "hidden" in kwargs:
        kwargs["hidden"] = tuple(kwargs["hidden"])
    kwargs.update(nested)
    try:
        return RunConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(path: str, cfg: RunConfig) -> None:
    text = json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"
    atomic_write_bytes(path, text.encode("utf-8"))


def _parse_override_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply `dotted.key=value` assignments and re-validate."""
    data = config_to_dict(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like dotted.key=value")
        dotted, raw = item.split("=", 1)
        parts = dotted.strip().split(".")
        node = data
        for i, part in enumerate(parts[:-1]):
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config key: {'.'.join(parts[: i + 1])}")
            node = node[part]
        leaf = parts[-1]
        if leaf not in node:
            raise ConfigError(f"unknown config key: {dotted.strip()}")
        node[leaf] = _parse_override_value(raw)
    return config_from_dict(data)
