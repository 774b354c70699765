"""Run configuration: defaults, JSON loading, schema validation, hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import so3, validation
from .moments import VARIANT_GENERAL, normalize_variant

CONFIG_KEYS = ("A", "sigma", "T", "N", "n_mc", "seed", "R", "variant")


class ConfigError(ValueError):
    """Configuration file or override failed schema validation."""


@dataclass(eq=False)
class RunConfig:
    """Validated parameters for one end-to-end run."""

    A: np.ndarray  # (3, 3) antisymmetric drift parameter
    sigma: float = 0.1
    T: float = 0.1
    N: int = 100
    n_mc: int = 500
    seed: int = 42
    R: float = 2.0
    variant: str = VARIANT_GENERAL

    def to_dict(self):
        """Plain-JSON form with A as a row-major 9-tuple."""
        return {
            "A": [float(x) for x in np.asarray(self.A, dtype=float).ravel()],
            "sigma": float(self.sigma),
            "T": float(self.T),
            "N": int(self.N),
            "n_mc": int(self.n_mc),
            "seed": int(self.seed),
            "R": float(self.R),
            "variant": self.variant,
        }

    @property
    def hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def default_config() -> RunConfig:
    """Baseline experiment: conjugation drift with rate about 1 rad/s."""
    return RunConfig(A=so3.hat_std([0.8, -0.4, 0.5]))


def _require_real(data, key, *, positive=False, nonnegative=False):
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number")
    v = float(v)
    if not np.isfinite(v):
        raise ConfigError(f"config key {key!r} must be finite")
    if positive and not v > 0.0:
        raise ConfigError(f"config key {key!r} must be positive")
    if nonnegative and v < 0.0:
        raise ConfigError(f"config key {key!r} must be non-negative")
    return v


def _require_int(data, key, *, minimum=None):
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"config key {key!r} must be an integer")
    if minimum is not None and v < minimum:
        raise ConfigError(f"config key {key!r} must be at least {minimum}")
    return int(v)


def _build(data) -> RunConfig:
    A = data["A"]
    if isinstance(A, np.ndarray):
        A = A.tolist()
    if not isinstance(A, (list, tuple)):
        raise ConfigError("config key 'A' must be a row-major 9-tuple")
    A = list(np.ravel(np.asarray(A, dtype=object)))
    if len(A) != 9 or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in A):
        raise ConfigError("config key 'A' must be a row-major 9-tuple of numbers")
    A = np.asarray(A, dtype=float).reshape(3, 3)
    try:
        A = validation.check_antisymmetric(A, exc=ConfigError)
    except ConfigError:
        raise
    sigma = _require_real(data, "sigma", nonnegative=True)
    T = _require_real(data, "T", positive=True)
    N = _require_int(data, "N", minimum=1)
    n_mc = _require_int(data, "n_mc", minimum=1)
    seed = _require_int(data, "seed", minimum=0)
    if seed >= 2**64:
        raise ConfigError("config key 'seed' must fit in an unsigned 64-bit integer")
    R = _require_real(data, "R", positive=True)
    if R > so3.BALL_RADIUS_MAX:
        raise ConfigError(
            f"config key 'R' must be at most {so3.BALL_RADIUS_MAX:.6f}"
        )
    try:
        variant = normalize_variant(data["variant"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(A=A, sigma=sigma, T=T, N=N, n_mc=n_mc, seed=seed, R=R,
                     variant=variant)


def load_config(path: Optional[str] = None, **overrides) -> RunConfig:
    """Build a validated RunConfig from defaults, an optional file, and overrides.

    Unknown keys in the file are rejected; ``overrides`` entries that are
    None are ignored (unset CLI flags).
    """
    data = default_config().to_dict()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                parsed = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(parsed, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(parsed) - set(CONFIG_KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        data.update(parsed)
    for key, value in overrides.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config override: {key}")
        if value is not None:
            data[key] = value
    return _build(data)
