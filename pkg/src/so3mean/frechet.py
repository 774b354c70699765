"""Karcher-mean estimation for rotation ensembles, with residual statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import so3, validation

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100


class NoConvergence(RuntimeError):
    """Fixed-point iteration did not reach the tolerance within max_iter."""


@dataclass
class FrechetResult:
    """Barycenter of an ensemble with the per-member residual coordinates.

    ``mean @ group_exp(residuals[j])`` reconstructs member ``j``, and the
    residual average has norm at most the stopping tolerance.
    """

    mean: np.ndarray  # (3, 3)
    residuals: np.ndarray  # (n, 3)
    iterations: int
    final_step_norm: float


def frechet_mean(ensemble, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Riemannian barycenter via the fixed-point iteration on residual means.

    Starting from the det-corrected polar projection of the arithmetic
    average, the mean is moved by the average residual
    ``exp((1/n) sum_j relative_log(mean, X_j))`` until the update norm is
    at most ``tol``.

    Parameters
    ----------
    ensemble : Ensemble, (n, 3, 3) or (n, 9) array-like
    tol : float, stopping threshold on the update norm.
    max_iter : int, maximum number of fixed-point iterations.

    Raises
    ------
    NoConvergence
        If the tolerance is not met within ``max_iter`` iterations.
    so3.AngleNearPi
        If a member falls near the cut locus of an iterate (ensemble too
        dispersed for a well-defined barycenter).
    """
    X = validation.check_members(ensemble)
    mean = so3.project_to_so3(X.mean(axis=0))
    for iteration in range(1, max_iter + 1):
        residuals = so3.group_log_many(mean.T @ X)
        step_vec = residuals.mean(axis=0)
        step_norm = float(np.linalg.norm(step_vec))
        if step_norm <= tol:
            return FrechetResult(mean, residuals, iteration, step_norm)
        mean = mean @ so3.group_exp(step_vec)
    raise NoConvergence(
        f"residual mean norm {step_norm:.3e} above {tol:g} after {max_iter} iterations"
    )


def variance_at(ensemble, g):
    """Average squared distance from ``g`` to the ensemble members."""
    X = validation.check_members(ensemble)
    g = np.asarray(g, dtype=float)
    logs = so3.group_log_many(g.T @ X)
    return float(np.mean(np.sum(logs * logs, axis=1)))


def empirical_covariance(residuals):
    """Second moment ``(1/n) sum_j r_j r_j^T`` of residual coordinates."""
    r = np.asarray(residuals, dtype=float)
    if r.ndim != 2 or r.shape[1] != 3 or len(r) == 0:
        raise ValueError("residuals must be a nonempty (n, 3) array")
    S = r.T @ r / len(r)
    return 0.5 * (S + S.T)


class FrechetMean(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`frechet_mean`.

    Parameters
    ----------
    tol : float, stopping threshold on the update norm.
    max_iter : int, maximum number of fixed-point iterations.

    Attributes
    ----------
    mean_ : (3, 3) barycenter.
    residuals_ : (n, 3) residual coordinates of the training members.
    covariance_ : (3, 3) second moment of the residuals.
    n_iter_ : iterations used.
    final_step_norm_ : norm of the last update.
    """

    def __init__(self, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        result = frechet_mean(X, tol=self.tol, max_iter=self.max_iter)
        self.mean_ = result.mean
        self.residuals_ = result.residuals
        self.covariance_ = empirical_covariance(result.residuals)
        self.n_iter_ = result.iterations
        self.final_step_norm_ = result.final_step_norm
        return self

    def transform(self, X):
        """Residual coordinates of rotations relative to the fitted mean."""
        check_is_fitted(self, "mean_")
        X = validation.check_members(X)
        return so3.group_log_many(self.mean_.T @ X)
