"""Numerical defaults and the plain-text ``key=value`` config loader."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

CONFIG_ENV = "CVBIT_CONFIG"


@dataclass(frozen=True)
class Settings:
    """Every tunable tolerance, cutoff and grid parameter in one place."""

    # angle optimizer
    grid_resolution: int = 32
    refine_iterations: int = 60
    max_sweeps: int = 200
    angle_tol: float = 1e-9
    value_tol: float = 1e-10

    # gaussian-core
    symmetry_tol: float = 1e-12
    physical_tol: float = 1e-9
    lambda_max: float = 9.0
    boundary_lambda: float = 1e3
    max_attempts: int = 100_000

    # fock-core / catalog
    tail_tol: float = 1e-8
    cutoff_cap: int = 200
    norm_tol: float = 1e-10
    hermitian_tol: float = 1e-12
    psd_tol: float = 1e-9
    series_tol: float = 1e-10
    series_nmax: int = 170

    # homodyne sampler
    sampler_extent: float = 8.0
    sampler_cells: int = 2048
    sampler_underflow: float = 1e-6
    partition_shots: int = 1 << 20

    workers: int = 1

    def replace(self, **changes) -> "Settings":
        return dataclasses.replace(self, **changes)


DEFAULT = Settings()


def _coerce(name: str, kind: type, raw: str):
    try:
        if kind is int:
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind.__name__}") from exc


def parse_config(text: str, base: Settings = DEFAULT) -> Settings:
    """Parse ``key = value`` lines (``#`` starts a comment) over ``base``."""
    types = {f.name: (int if f.default.__class__ is int else float) for f in fields(Settings)}
    changes = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown setting {key!r}")
        changes[key] = _coerce(key, types[key], raw)
    return base.replace(**changes)


def load_settings(path: str | os.PathLike | None = None) -> Settings:
    """Load settings from ``path``, else from ``$CVBIT_CONFIG``, else defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return DEFAULT
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
