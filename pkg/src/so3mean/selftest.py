"""Built-in invariant suite printing one pass/fail line per check.

Each check returns a worst-case observed error which is compared with a
pinned tolerance.  The checks call the algebra through module attributes,
so a corrupted operation (for example a sign flip in the bracket) shows
up as explicit failures here.
"""

from __future__ import annotations

import sys

import numpy as np

from . import so3
from .drift import make_conjugation_drift, make_constant_drift
from .moments import (
    VARIANT_GENERAL,
    VARIANT_PAPER,
    PredictionState,
    h_connection,
    h_general,
    h_so3,
    integrate,
)
from .sde import NoiseModel

_E = np.eye(3)


def _random_unit_cov(rng, scale):
    B = rng.normal(size=(3, 3))
    S = B @ B.T
    return scale * S / np.trace(S)


def _check_structure_constants(rng):
    worst = 0.0
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        worst = max(
            worst,
            float(np.linalg.norm(so3.bracket(_E[i], _E[j]) - _E[k] / so3.SQRT2)),
            float(np.linalg.norm(so3.bracket(_E[j], _E[i]) + _E[k] / so3.SQRT2)),
        )
    return worst


def _check_bracket_commutator(rng):
    worst = 0.0
    for _ in range(100):
        u, v = rng.normal(size=(2, 3))
        lhs = so3.hat(so3.bracket(u, v))
        rhs = so3.hat(u) @ so3.hat(v) - so3.hat(v) @ so3.hat(u)
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


def _check_jacobi(rng):
    worst = 0.0
    for _ in range(100):
        u, v, w = rng.normal(size=(3, 3))
        total = (
            so3.bracket(u, so3.bracket(v, w))
            + so3.bracket(v, so3.bracket(w, u))
            + so3.bracket(w, so3.bracket(u, v))
        )
        worst = max(worst, float(np.linalg.norm(total)))
    return worst


def _check_exp_log_roundtrip(rng):
    worst = 0.0
    for _ in range(100):
        c = rng.normal(size=3)
        c *= rng.uniform(0.0, so3.SQRT2 * (np.pi - 0.01)) / np.linalg.norm(c)
        worst = max(worst, float(np.linalg.norm(so3.group_log(so3.group_exp(c)) - c)))
    return worst


def _check_distance_bi_invariance(rng):
    worst = 0.0
    for _ in range(100):
        g, x, y = (so3.group_exp(rng.normal(size=3)) for _ in range(3))
        d = so3.distance(x, y)
        worst = max(
            worst,
            abs(so3.distance(g @ x, g @ y) - d),
            abs(so3.distance(x @ g, y @ g) - d),
        )
    return worst


def _check_curvature_contraction(rng):
    # sum_i [[[e_i, nu], nu], e_i] vanishes for every nu.
    worst = 0.0
    for _ in range(100):
        nu = rng.normal(size=3)
        total = np.zeros(3)
        for i in range(3):
            total += so3.bracket(so3.bracket(so3.bracket(_E[i], nu), nu), _E[i])
        worst = max(worst, float(np.linalg.norm(total)))
    return worst


def _check_perp_projector(rng):
    # sum_i bracket(e_i, nu) outer bracket(e_i, nu) = (|nu|^2 / 2) P_{nu perp}.
    worst = 0.0
    for _ in range(100):
        nu = rng.normal(size=3)
        nn = float(nu @ nu)
        total = np.zeros((3, 3))
        for i in range(3):
            w = so3.bracket(_E[i], nu)
            total += np.outer(w, w)
        expected = 0.5 * nn * (_E - np.outer(nu, nu) / nn)
        worst = max(worst, float(np.linalg.norm(total - expected)))
    return worst


def _random_mean_cov_drift(rng):
    A = so3.hat_std(rng.normal(size=3))
    drift = make_conjugation_drift(A)
    mean = so3.group_exp(rng.normal(size=3))
    cov = _random_unit_cov(rng, rng.uniform(0.001, 0.05))
    return PredictionState(mean, cov, 0.0), drift


def _check_mean_form_equivalence(rng):
    worst = 0.0
    noise = NoiseModel.isotropic(0.1)
    for _ in range(100):
        state, drift = _random_mean_cov_drift(rng)
        worst = max(
            worst,
            float(np.linalg.norm(
                h_so3(state, drift, noise) - h_general(state, drift, noise)
            )),
        )
    return worst


def _check_connection_form_equivalence(rng):
    worst = 0.0
    noise = NoiseModel.isotropic(0.1)
    for _ in range(100):
        state, drift = _random_mean_cov_drift(rng)
        worst = max(
            worst,
            float(np.linalg.norm(
                h_connection(state, drift, noise) - h_so3(state, drift, noise)
            )),
        )
    return worst


def _check_drift_correction_cancellation(rng):
    # For the conjugation drift the second-order correction cancels, so
    # the mean velocity reduces to the drift for every covariance.
    A = so3.hat_std([0.8, -0.4, 0.5])
    drift = make_conjugation_drift(A)
    noise = NoiseModel.isotropic(0.1)
    worst = 0.0
    for _ in range(100):
        mean = so3.group_exp(rng.normal(size=3))
        cov = _random_unit_cov(rng, rng.uniform(0.0, 0.1))
        state = PredictionState(mean, cov, 0.0)
        h = h_general(state, drift, noise)
        worst = max(worst, float(np.linalg.norm(h - drift.value(mean))))
    return worst


def _closed_form_error(variant):
    sigma, T = 0.1, 0.1
    drift = make_constant_drift(np.zeros(3))
    noise = NoiseModel.isotropic(sigma)
    state0 = PredictionState(np.eye(3), np.zeros((3, 3)), 0.0)
    S = integrate(state0, drift, noise, T, 100, variant)[-1].cov
    if variant == VARIANT_PAPER:
        s = 4.0 * sigma**2 * np.expm1(T / 4.0)
    else:
        s = 12.0 * (-np.expm1(-(sigma**2) * T / 12.0))
    return float(np.linalg.norm(S - s * _E)) / float(np.linalg.norm(s * _E))


def _check_closed_form_general(rng):
    return _closed_form_error(VARIANT_GENERAL)


def _check_closed_form_paper(rng):
    return _closed_form_error(VARIANT_PAPER)


def _check_variant_gap(rng):
    drift = make_conjugation_drift(so3.hat_std([0.8, -0.4, 0.5]))
    noise = NoiseModel.isotropic(0.1)
    state0 = PredictionState(np.eye(3), np.zeros((3, 3)), 0.0)
    S_g = integrate(state0, drift, noise, 0.1, 100, VARIANT_GENERAL)[-1].cov
    S_p = integrate(state0, drift, noise, 0.1, 100, VARIANT_PAPER)[-1].cov
    return float(np.linalg.norm(S_g - S_p)) / float(np.linalg.norm(S_g))


_CHECKS = (
    ("structure-constants", _check_structure_constants, 1e-15),
    ("bracket-commutator", _check_bracket_commutator, 1e-13),
    ("jacobi-identity", _check_jacobi, 1e-13),
    ("exp-log-roundtrip", _check_exp_log_roundtrip, 1e-10),
    ("distance-bi-invariance", _check_distance_bi_invariance, 1e-10),
    ("curvature-contraction", _check_curvature_contraction, 1e-12),
    ("perp-projector", _check_perp_projector, 1e-12),
    ("mean-form-equivalence", _check_mean_form_equivalence, 1e-14),
    ("connection-form-equivalence", _check_connection_form_equivalence, 1e-12),
    ("drift-correction-cancellation", _check_drift_correction_cancellation, 1e-13),
    ("covariance-closed-form-general", _check_closed_form_general, 1e-8),
    ("covariance-closed-form-trace", _check_closed_form_paper, 1e-8),
    ("variant-gap", _check_variant_gap, 2e-2),
)


def run_selftest(stream=None, seed=0) -> bool:
    """Run every check, print one line each, return True when all pass."""
    stream = sys.stdout if stream is None else stream
    failures = 0
    for name, fn, tol in _CHECKS:
        rng = np.random.default_rng(seed)
        try:
            observed = fn(rng)
            ok = observed <= tol
            detail = f"observed={observed:.3e} tol={tol:.0e}"
        except Exception as exc:  # a raised check is a failure, not a crash
            ok = False
            detail = f"raised {type(exc).__name__}: {exc}"
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=stream)
    total = len(_CHECKS)
    print(f"{total - failures}/{total} checks passed", file=stream)
    return failures == 0
