"""Run configuration: flat key=value files, presets, and the resolved hash.

Config files are plain text, one `key = value` per line, `#` comments and
blank lines ignored. Precedence: command-line overrides > file > defaults.
`seed` has no default on purpose; every run must pin it explicitly so that
outputs are reproducible byte for byte.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from .cascade import DetectionConfig, DotParams
from .errors import DataError, UsageError
from .events import FORMATS
from .polarization import MeasurementSetting

_FLOAT_KEYS = {
    "splitting_ueV",
    "exciton_dwell_ns",
    "scramble_prob",
    "background_fraction",
    "background_dip",
    "pair_efficiency",
}
_INT_KEYS = {"cycles", "seed", "partitions", "max_delay", "bootstrap_resamples", "bootstrap_seed"}
_STR_KEYS = {"event_format"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS

PRESET_NAMES = ("ideal", "paper_dot", "classical")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters for one simulation + analysis run."""

    seed: int
    splitting_ueV: float = 0.0
    exciton_dwell_ns: float = 1.0
    scramble_prob: float = 0.0
    background_fraction: float = 0.0
    background_dip: float | None = None
    cycles: int = 100_000
    pair_efficiency: float = 0.5
    partitions: int = 1
    max_delay: int = 10
    bootstrap_resamples: int = 500
    bootstrap_seed: int | None = None
    event_format: str = "binary"

    def __post_init__(self):
        if self.cycles <= 0:
            raise DataError(f"cycles must be positive, got {self.cycles}")
        if self.partitions <= 0:
            raise DataError(f"partitions must be positive, got {self.partitions}")
        if self.max_delay < 1:
            raise DataError(f"max_delay must be >= 1, got {self.max_delay}")
        if self.bootstrap_resamples < 0:
            raise DataError(f"bootstrap_resamples must be >= 0, got {self.bootstrap_resamples}")
        if self.event_format not in FORMATS:
            raise DataError(
                f"event_format must be one of {FORMATS}, got {self.event_format!r}"
            )
        # DotParams revalidates the physics ranges (probabilities, dip bound).
        self.dot_params()

    def dot_params(self) -> DotParams:
        return DotParams(
            splitting_ueV=self.splitting_ueV,
            exciton_dwell_ns=self.exciton_dwell_ns,
            scramble_prob=self.scramble_prob,
            background_fraction=self.background_fraction,
            background_dip=self.background_dip,
        )

    def detection(self, setting: MeasurementSetting | None, seed: int | None = None) -> DetectionConfig:
        return DetectionConfig(
            setting=setting,
            cycles=self.cycles,
            pair_efficiency=self.pair_efficiency,
            seed=self.seed if seed is None else seed,
            partitions=self.partitions,
        )

    def resolved_bootstrap_seed(self) -> int:
        return self.seed if self.bootstrap_seed is None else self.bootstrap_seed

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _convert(key: str, raw: str, source: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise DataError(f"{source}: bad value for {key}: {raw!r}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse key=value lines into a dict of typed override values."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise DataError(f"{source}: line {lineno}: expected key = value, got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in KNOWN_KEYS:
            raise DataError(f"{source}: line {lineno}: unknown key {key!r}")
        if key in values:
            raise DataError(f"{source}: line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw, f"{source}: line {lineno}")
    return values


def load_config_file(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise DataError(f"config file not found: {p}")
    return parse_config_text(p.read_text(), source=str(p))


def load_preset(name: str) -> dict:
    if name not in PRESET_NAMES:
        raise DataError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    text = resources.files("biphoton.presets").joinpath(f"{name}.cfg").read_text()
    return parse_config_text(text, source=f"preset:{name}")


def resolve_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge defaults, file values, and overrides (highest precedence last)."""
    merged: dict = {}
    for layer in (file_values or {}, overrides or {}):
        for key, value in layer.items():
            if key not in KNOWN_KEYS:
                raise DataError(f"unknown config key {key!r}")
            if value is not None:
                merged[key] = value
    if "seed" not in merged:
        raise UsageError("seed is required (set it in the config file or pass --seed)")
    return RunConfig(**merged)


def config_hash(cfg: RunConfig) -> str:
    """sha256 over the canonical key=value rendering of the resolved config."""
    lines = []
    for key in sorted(cfg.to_dict()):
        value = getattr(cfg, key)
        if value is None:
            continue
        rendered = repr(float(value)) if key in _FLOAT_KEYS else str(value)
        lines.append(f"{key}={rendered}")
    blob = "\n".join(lines).encode()
    return hashlib.sha256(blob).hexdigest()
