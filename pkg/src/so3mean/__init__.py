"""Fréchet-mean and covariance prediction for rotation-group diffusions.

The package couples three pieces: a deterministic moment propagator for
the mean and error covariance of a diffusion on the rotation group, a
seeded Monte Carlo simulator of the underlying stochastic dynamics, and a
Karcher-mean estimator that turns simulated ensembles into an oracle the
propagator is validated against.
"""

__version__ = "0.1.0"

from .config import ConfigError, RunConfig, default_config, load_config
from .drift import (
    DriftModel,
    NotAntisymmetric,
    make_conjugation_drift,
    make_constant_drift,
    make_finite_difference_drift,
)
from .frechet import (
    FrechetMean,
    FrechetResult,
    NoConvergence,
    empirical_covariance,
    frechet_mean,
    variance_at,
)
from .moments import (
    VARIANT_GENERAL,
    VARIANT_PAPER,
    VARIANTS,
    CovarianceBlowup,
    MomentPropagator,
    NonIsotropicNoise,
    PredictionState,
    apply_bilinear,
    h_general,
    h_so3,
    integrate,
    sigma_rhs,
)
from .sde import (
    Ensemble,
    NoiseModel,
    PathConfig,
    StoppedPath,
    simulate_ensemble,
    simulate_path,
    step,
)
from .so3 import (
    AngleNearPi,
    ad,
    ball_constants,
    bracket,
    distance,
    group_exp,
    group_log,
    hat,
    hat_std,
    project_to_so3,
    relative_log,
    vee,
    vee_std,
)

__all__ = [
    "__version__",
    "AngleNearPi",
    "ConfigError",
    "CovarianceBlowup",
    "DriftModel",
    "Ensemble",
    "FrechetMean",
    "FrechetResult",
    "MomentPropagator",
    "NoConvergence",
    "NoiseModel",
    "NonIsotropicNoise",
    "NotAntisymmetric",
    "PathConfig",
    "PredictionState",
    "RunConfig",
    "StoppedPath",
    "VARIANTS",
    "VARIANT_GENERAL",
    "VARIANT_PAPER",
    "ad",
    "apply_bilinear",
    "ball_constants",
    "bracket",
    "default_config",
    "distance",
    "empirical_covariance",
    "frechet_mean",
    "group_exp",
    "group_log",
    "h_general",
    "h_so3",
    "hat",
    "hat_std",
    "integrate",
    "load_config",
    "make_conjugation_drift",
    "make_constant_drift",
    "make_finite_difference_drift",
    "project_to_so3",
    "relative_log",
    "sigma_rhs",
    "simulate_ensemble",
    "simulate_path",
    "step",
    "variance_at",
    "vee",
    "vee_std",
]
