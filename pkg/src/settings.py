"""
Project settings.

``config(key)`` returns pipeline defaults, overridable through environment
variables (a ``.env`` file at the project root is honoured). ``RunConfig``
bundles everything one CLI run or batch needs.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import chartbook
from dotenv import load_dotenv

from chaos_maps import DEFAULT_BURN_IN, ChaosParams
from errors import ParameterError, PathError
from qkd_sim import DEFAULT_THRESHOLD, SACRIFICE_FRACTION, ChannelConfig

BASE_DIR = chartbook.env.get_project_root()
load_dotenv(BASE_DIR / ".env")

_DEFAULTS = {
    "DATA_DIR": (BASE_DIR / "_data", Path),
    "OUTPUT_DIR": (BASE_DIR / "_output", Path),
    "DATASET_DIR": (None, Path),
    "RNG_SEED": (42, int),
    "KEY_LENGTH": (256, int),
    "P_NOISE": (0.02, float),
    "DETECTION_THRESHOLD": (DEFAULT_THRESHOLD, float),
    "SACRIFICE_FRACTION": (SACRIFICE_FRACTION, float),
    "BURN_IN": (DEFAULT_BURN_IN, int),
    "JOBS": (1, int),
}


def config(key, default=None):
    """Return a configuration value, preferring the environment."""
    if key not in _DEFAULTS:
        return os.environ.get(key, default)
    fallback, cast = _DEFAULTS[key]
    raw = os.environ.get(key)
    if raw is not None and raw != "":
        try:
            return cast(raw)
        except ValueError as exc:
            raise ParameterError(f"environment variable {key}={raw!r} is invalid") from exc
    if key == "DATASET_DIR" and fallback is None:
        return config("DATA_DIR") / "images"
    return fallback if default is None else default


def load_chaos_params(path=None, burn_in=None):
    """ChaosParams from a JSON file of overrides (field name -> value)."""
    overrides = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise PathError(f"params file not found: {path}")
        try:
            overrides = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParameterError(f"params file {path} is not valid JSON: {exc}") from exc
        if not isinstance(overrides, dict):
            raise ParameterError(f"params file {path} must hold a JSON object")
    if "burn_in" not in overrides:
        overrides["burn_in"] = config("BURN_IN") if burn_in is None else burn_in
    return ChaosParams.from_dict(overrides)


@dataclass(frozen=True)
class RunConfig:
    """Tunables of one run. A run with ``rng_seed`` set is bit-reproducible."""

    chaos: ChaosParams = field(default_factory=ChaosParams)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    rng_seed: int | None = None
    key_length: int = 256
    pair_count: int | None = None
    sacrifice_fraction: float = SACRIFICE_FRACTION
    jobs: int = 1
    input_path: Path | None = None
    output_path: Path | None = None

    def __post_init__(self):
        if self.rng_seed is not None and not 0 <= self.rng_seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.rng_seed}")
        if self.key_length < 1:
            raise ParameterError(f"key length must be positive, got {self.key_length}")
        if self.jobs < 1:
            raise ParameterError(f"--jobs must be at least 1, got {self.jobs}")
