"""Ensemble simulation of the rotation-group diffusion with stopped paths."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.special import ndtri

from . import so3
from .drift import DriftModel


@dataclass(eq=False)
class NoiseModel:
    """Constant algebra-valued noise directions ``sigma_1 .. sigma_m``.

    ``sigmas`` has shape ``(m, 3)`` with one coordinate vector per row and
    is treated as immutable; derived tensors are cached on first use.
    """

    sigmas: np.ndarray

    def __post_init__(self):
        self.sigmas = np.asarray(self.sigmas, dtype=float).reshape(-1, 3)

    @classmethod
    def isotropic(cls, sigma):
        """Noise ``sigma * (G_1, G_2, G_3)``; ``sigma = 0`` gives the empty model."""
        sigma = float(sigma)
        if sigma < 0.0:
            raise ValueError("noise level must be non-negative")
        if sigma == 0.0:
            return cls(np.zeros((0, 3)))
        return cls(sigma * np.eye(3))

    @property
    def m(self) -> int:
        return self.sigmas.shape[0]

    @cached_property
    def diffusion(self) -> np.ndarray:
        """The 3x3 matrix ``sum_i sigma_i sigma_i^T``."""
        return self.sigmas.T @ self.sigmas

    @cached_property
    def ad_operators(self) -> np.ndarray:
        """Stack of ``ad(sigma_i)`` matrices, shape ``(m, 3, 3)``."""
        if self.m == 0:
            return np.zeros((0, 3, 3))
        return np.stack([so3.ad(s) for s in self.sigmas])

    @cached_property
    def ad_square_sum(self) -> np.ndarray:
        """The 3x3 matrix ``sum_i ad(sigma_i)^2``."""
        ads = self.ad_operators
        return np.einsum("mij,mjk->ik", ads, ads)

    @cached_property
    def triple_bracket_tensor(self) -> np.ndarray:
        """Tensor ``T[:, a, c] = sum_i [[[sigma_i, e_a], e_c], sigma_i]``."""
        E = np.eye(3)
        T = np.zeros((3, 3, 3))
        for s in self.sigmas:
            for a in range(3):
                sa = so3.bracket(s, E[a])
                for c in range(3):
                    T[:, a, c] += so3.bracket(so3.bracket(sa, E[c]), s)
        return T

    @cached_property
    def isotropic_level(self) -> Optional[float]:
        """The scalar ``sigma`` if the model is ``sigma * (G_1, G_2, G_3)``, else None."""
        if self.m == 0:
            return 0.0
        if self.sigmas.shape != (3, 3):
            return None
        s = float(self.sigmas[0, 0])
        if s >= 0.0 and float(np.abs(self.sigmas - s * np.eye(3)).max()) <= 1e-12:
            return s
        return None


@dataclass
class PathConfig:
    """Time grid, seed, and stopping ball for one simulation run."""

    T: float
    N: int
    seed: int
    ball_radius: float = 2.0

    def __post_init__(self):
        if not self.T > 0.0:
            raise ValueError("horizon T must be positive")
        if self.N < 1:
            raise ValueError("step count N must be at least 1")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ValueError("seed must be an integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if not 0.0 < self.ball_radius <= so3.BALL_RADIUS_MAX:
            raise ValueError(
                f"ball radius must lie in (0, {so3.BALL_RADIUS_MAX:.6f}]"
            )

    @property
    def dt(self) -> float:
        return self.T / self.N


@dataclass
class StoppedPath:
    """States on the uniform grid, frozen from the first exit of the ball."""

    states: np.ndarray  # (N+1, 3, 3)
    tau_step: Optional[int] = None


@dataclass(eq=False)
class Ensemble:
    """One time slice of simulated paths with per-path stopping flags."""

    members: np.ndarray  # (n, 3, 3)
    stopped: np.ndarray = field(default=None)  # (n,) bool

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=float)
        if self.members.ndim != 3 or self.members.shape[1:] != (3, 3):
            raise ValueError("members must have shape (n, 3, 3)")
        if len(self.members) == 0:
            raise ValueError("ensemble must be nonempty")
        if self.stopped is None:
            self.stopped = np.zeros(len(self.members), dtype=bool)
        self.stopped = np.asarray(self.stopped, dtype=bool)
        if self.stopped.shape != (len(self.members),):
            raise ValueError("stopped flags must have one entry per member")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def stopped_count(self) -> int:
        return int(self.stopped.sum())


def brownian_increments(seed, path_id, n_steps, m, dt):
    """Increments for one path, keyed by ``(seed, path_id, step, component)``.

    A counter-based generator keyed on ``(seed, path_id)`` is drawn in
    step-major order and mapped to normals through the inverse CDF, so any
    execution order or worker count reproduces the same stream.
    """
    key = np.array([seed, path_id], dtype=np.uint64)
    raw = np.random.Philox(key=key).random_raw(n_steps * m)
    u = (np.right_shift(raw, np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return np.sqrt(dt) * ndtri(u).reshape(n_steps, m)


def step(x, drift: DriftModel, noise: NoiseModel, dt, dW):
    """One exponential Euler update ``x -> x exp(b(x) dt + sum_i sigma_i dW_i)``.

    The exponential-coordinate update is consistent with the Stratonovich
    reading of the dynamics; no Ito correction is added.
    """
    incr = drift.value(x) * dt
    if noise.m:
        incr = incr + noise.sigmas.T @ np.asarray(dW, dtype=float)
    return x @ so3.group_exp(incr)


def _simulate_block(config: PathConfig, drift, noise, x0, path_ids):
    """Simulate a block of paths; returns (slices, tau_steps).

    ``slices`` has shape ``(N+1, n, 3, 3)``; ``tau_steps[j]`` is the state
    index of the first exit from the ball for path ``j``, or -1.
    """
    n = len(path_ids)
    dt = config.dt
    dW = np.stack(
        [brownian_increments(config.seed, pid, config.N, noise.m, dt) for pid in path_ids]
    )
    X = np.broadcast_to(np.asarray(x0, dtype=float), (n, 3, 3)).copy()
    slices = np.empty((config.N + 1, n, 3, 3))
    slices[0] = X
    tau = np.full(n, -1, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    for k in range(config.N):
        if np.any(alive):
            idx = np.nonzero(alive)[0]
            incr = drift.values(X[idx]) * dt
            if noise.m:
                incr = incr + dW[idx, k] @ noise.sigmas
            X[idx] = X[idx] @ so3.group_exp_many(incr)
            dist = so3.SQRT2 * so3.rotation_angle_many(X[idx])
            exited = dist >= config.ball_radius
            if np.any(exited):
                tau[idx[exited]] = k + 1
                alive[idx[exited]] = False
        slices[k + 1] = X
    return slices, tau


def simulate_path(config: PathConfig, drift, noise, x0=None, path_id=0):
    """Simulate one path on the uniform grid, frozen at the first ball exit."""
    if x0 is None:
        x0 = np.eye(3)
    slices, tau = _simulate_block(config, drift, noise, x0, [path_id])
    tau_step = None if tau[0] < 0 else int(tau[0])
    return StoppedPath(states=slices[:, 0], tau_step=tau_step)


def simulate_ensemble(config: PathConfig, drift, noise, x0=None, n_paths=1, workers=1):
    """Simulate ``n_paths`` independent paths; returns one Ensemble per grid time.

    Paths are keyed by their index, so the result is independent of the
    execution order and of ``workers``.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if x0 is None:
        x0 = np.eye(3)
    path_ids = np.arange(n_paths)
    workers = min(workers, n_paths)
    if workers == 1:
        slices, tau = _simulate_block(config, drift, noise, x0, path_ids)
    else:
        chunks = np.array_split(path_ids, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda ids: _simulate_block(config, drift, noise, x0, ids), chunks
                )
            )
        slices = np.concatenate([p[0] for p in parts], axis=1)
        tau = np.concatenate([p[1] for p in parts])
    out = []
    for k in range(config.N + 1):
        stopped = (tau >= 0) & (tau <= k)
        out.append(Ensemble(members=slices[k], stopped=stopped))
    return out
