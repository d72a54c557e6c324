"""Pipeline configuration: one flat YAML mapping plus ``SUBFRAME_*`` environment overrides."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from .errors import ArtifactError, ConfigError
from .frame import J_CAP, J_HARD_CAP
from .geometry import MESH_LEVEL_CAP

ENV_PREFIX = "SUBFRAME_"

# fields that change where and how results are written, not what they are
_NON_SEMANTIC = {"out", "jobs", "format"}


@dataclass(frozen=True)
class PipelineConfig:
    mesh_level: int = 6
    J: int = 1
    metric: str = "cc"
    tol: float = 1e-9
    recon_tol: float = 1e-6
    seed: int = 0
    n_samples: int = 100
    localization_N: float = 5.0
    allow_extended: bool = False
    jobs: int = 1
    out: str = "runs"
    format: str = "json"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 0 <= self.mesh_level <= MESH_LEVEL_CAP:
            raise ConfigError(f"mesh_level must be in [0, {MESH_LEVEL_CAP}], got {self.mesh_level}")
        cap = J_HARD_CAP if self.allow_extended else J_CAP
        if not 0 <= self.J <= cap:
            raise ConfigError(f"J must be in [0, {cap}], got {self.J}")
        if self.metric not in ("cc", "riemann"):
            raise ConfigError(f"metric must be 'cc' or 'riemann', got {self.metric!r}")
        if not (self.tol > 0 and self.recon_tol > 0):
            raise ConfigError("tolerances must be > 0")
        if self.n_samples < 1 or self.jobs < 1:
            raise ConfigError("n_samples and jobs must be >= 1")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be 'json' or 'csv', got {self.format!r}")

    def semantic(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if k not in _NON_SEMANTIC}

    def hash(self) -> str:
        blob = json.dumps(self.semantic(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **kw) -> "PipelineConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return dataclasses.replace(self, **kw)


def _coerce(name: str, raw, typ):
    try:
        if typ is bool or typ == "bool":
            if isinstance(raw, bool):
                return raw
            return str(raw).strip().lower() in ("1", "true", "yes", "on")
        if typ in (int, "int"):
            return int(raw)
        if typ in (float, "float"):
            return float(raw)
        return str(raw)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad value for {name}: {raw!r}") from err


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None, env=None) -> PipelineConfig:
    """File values, then environment ``SUBFRAME_<FIELD>``, then explicit overrides."""
    env = os.environ if env is None else env
    types = {f.name: f.type for f in fields(PipelineConfig)}
    values: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ArtifactError(f"cannot read config {path}: {err}") from err
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError("config file must be a flat key-value mapping")
        for k, v in data.items():
            if k not in types:
                raise ConfigError(f"unknown config key {k!r}")
            if isinstance(v, (dict, list)):
                raise ConfigError(f"config key {k!r} must be a scalar")
            values[k] = _coerce(k, v, types[k])
    for k in types:
        key = ENV_PREFIX + k.upper()
        if key in env:
            values[k] = _coerce(k, env[key], types[k])
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k not in types:
            raise ConfigError(f"unknown config key {k!r}")
        values[k] = _coerce(k, v, types[k])
    return PipelineConfig(**values)
