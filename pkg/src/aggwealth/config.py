"""YAML config documents for runs and sweeps.

Keys mirror the dataclass field names. Unknown keys are errors, and every
error names the offending field path (``money_kernel.p_in``).
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .engine import RunConfig
from .kernels import MigrationKernelSpec, MoneyKernelSpec
from .model import ConfigError, MacroInvariants, SizeInitSpec

SWEEP_AXES = ("sigma_d", "p_in")


class SchemaError(ConfigError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


_NESTED = {
    "invariants": MacroInvariants,
    "size_spec": SizeInitSpec,
    "money_kernel": MoneyKernelSpec,
    "migration_kernel": MigrationKernelSpec,
}

_INT_FIELDS = {
    "n_aggregates", "n_agents", "n_hat0", "steps", "transactions_per_step",
    "migrations_per_step", "sample_every", "seed", "snapshot_after", "replicates",
}
_FLOAT_FIELDS = {"total_money", "mean", "sigma_d", "p_in", "gamma", "wealth_per_agent", "entropy_bin_width"}
_BOOL_FIELDS = {"discrete", "remove_empty"}


def _coerce(path: str, name: str, value):
    if value is None:
        return None
    if name in _BOOL_FIELDS:
        if not isinstance(value, bool):
            raise SchemaError(path, f"expected true/false, got {value!r}")
        return value
    if name in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise SchemaError(path, f"expected an integer, got {value!r}")
        return int(value)
    if name in _FLOAT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(path, f"expected a number, got {value!r}")
        return float(value)
    return value


def _build(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise SchemaError(path, f"expected a mapping, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        where = ", ".join(f"{path}.{k}" if path else k for k in unknown)
        raise SchemaError(where, "unknown key")
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        if name in _NESTED:
            kwargs[name] = _build(_NESTED[name], value, sub)
        else:
            kwargs[name] = _coerce(sub, name, value)
    try:
        return cls(**kwargs)
    except SchemaError:
        raise
    except ConfigError as exc:
        field = _guess_field(str(exc), fields)
        raise SchemaError(f"{path}.{field}" if path and field else (field or path), str(exc)) from None
    except TypeError as exc:
        raise SchemaError(path, str(exc)) from None


def _guess_field(message: str, fields) -> str:
    for name in sorted(fields, key=len, reverse=True):
        if message.startswith(name) or f" {name} " in f" {message} ":
            return name
    return ""


def run_config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data, "")


def run_config_to_dict(config: RunConfig) -> dict:
    return dataclasses.asdict(config)


def load_run_config(path: str | Path) -> RunConfig:
    return run_config_from_dict(_load_yaml(path))


def dump_config(data: dict) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=False)


def config_hash(config: RunConfig | dict) -> str:
    data = run_config_to_dict(config) if isinstance(config, RunConfig) else config
    blob = json.dumps(data, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _load_yaml(path) -> dict:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise SchemaError("", f"not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError("", "config document must be a mapping")
    return data


@dataclass(frozen=True)
class SweepSpec:
    """One axis of initial heterogeneity or locality, swept with replicates.

    Replicate ``r`` runs with seed ``base_config.seed + r`` at every axis value.
    """

    axis: str
    values: tuple[float, ...]
    base_config: RunConfig
    replicates: int = 3

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise SchemaError("axis", f"must be one of {SWEEP_AXES}, got {self.axis!r}")
        if not self.values:
            raise SchemaError("values", "must be a non-empty list")
        if list(self.values) != sorted(self.values):
            raise SchemaError("values", "must be ascending")
        lo, hi = (0.0, float("inf")) if self.axis == "sigma_d" else (0.0, 1.0)
        bad = [v for v in self.values if not lo <= v <= hi]
        if bad:
            raise SchemaError("values", f"{bad} outside the {self.axis} domain [{lo}, {hi}]")
        if self.replicates < 1:
            raise SchemaError("replicates", "must be positive")

    @property
    def observable(self) -> str:
        """Entropy series fitted on this axis."""
        return "S_d" if self.axis == "sigma_d" else "S_m"

    def config_for(self, value: float, replicate: int) -> RunConfig:
        base = self.base_config
        if self.axis == "sigma_d":
            size_spec = dataclasses.replace(base.size_spec, kind="normal", sigma_d=float(value))
            changed = dict(size_spec=size_spec)
        else:
            changed = dict(money_kernel=dataclasses.replace(base.money_kernel, p_in=float(value)))
        return dataclasses.replace(base, seed=base.seed + replicate, **changed)


def sweep_spec_from_dict(data: dict) -> SweepSpec:
    if not isinstance(data, dict):
        raise SchemaError("", "sweep spec must be a mapping")
    allowed = {"axis", "values", "base_config", "replicates"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise SchemaError(", ".join(unknown), "unknown key")
    for key in ("axis", "values", "base_config"):
        if key not in data:
            raise SchemaError(key, "missing")
    values = data["values"]
    if not isinstance(values, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise SchemaError("values", "must be a list of numbers")
    base = _build(RunConfig, data["base_config"], "base_config")
    replicates = _coerce("replicates", "replicates", data.get("replicates", 3))
    return SweepSpec(data["axis"], tuple(float(v) for v in values), base, replicates)


def load_sweep_spec(path: str | Path) -> SweepSpec:
    return sweep_spec_from_dict(_load_yaml(path))
