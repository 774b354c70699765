"""Moment-system tests: closed forms, cross-form equivalence, order, oracles."""

import numpy as np
import pytest
from scipy.linalg import expm
from sklearn.base import clone

from so3mean import drift, moments, sde, so3
from so3mean.moments import (
    VARIANT_GENERAL,
    VARIANT_PAPER,
    MomentPropagator,
    PredictionState,
    apply_bilinear,
    h_connection,
    h_general,
    h_so3,
    integrate,
    normalize_variant,
    sigma_rhs,
)

E = np.eye(3)
A_REF = so3.hat_std([0.8, -0.4, 0.5])


def random_cov(rng, scale=0.05):
    M = rng.normal(size=(3, 3)) * scale
    return M @ M.T


def random_rotation(rng, scale=1.5):
    c = rng.normal(size=3)
    c *= rng.uniform(0.0, scale) / np.linalg.norm(c)
    return so3.group_exp(c)


def test_normalize_variant():
    assert normalize_variant("general-eq7") == VARIANT_GENERAL
    assert normalize_variant("general_eq7") == VARIANT_GENERAL
    assert normalize_variant("paper_eq9") == VARIANT_PAPER
    with pytest.raises(ValueError):
        normalize_variant("eq7")


def test_apply_bilinear_forms():
    # The bracket is antisymmetric, so any symmetric contraction kills it.
    S = np.array([[0.2, 0.05, 0.0], [0.05, 0.1, -0.02], [0.0, -0.02, 0.3]])
    out = apply_bilinear(lambda u, v: so3.bracket(u, v), S)
    assert np.linalg.norm(out) <= 1e-16
    # A rank-one moment picks out a single pair evaluation.
    L = lambda u, v: so3.bracket(so3.bracket(np.array([1.0, 2.0, 3.0]), u), v)
    np.testing.assert_allclose(
        apply_bilinear(L, np.outer(E[0], E[0])), L(E[0], E[0]), atol=1e-16
    )
    # Tensor input takes the same contraction path.
    T = np.zeros((3, 3, 3))
    for a in range(3):
        for c in range(3):
            T[:, a, c] = L(E[a], E[c])
    np.testing.assert_allclose(apply_bilinear(T, S), apply_bilinear(L, S), atol=1e-15)
    # Contracting [[b, u], v] with the identity recovers -b (curvature trace).
    b = np.array([0.4, -0.7, 0.2])
    out = apply_bilinear(lambda u, v: so3.bracket(so3.bracket(b, u), v), E)
    np.testing.assert_allclose(out, -b, atol=1e-15)


def test_h_reduces_to_drift_at_zero_covariance():
    model = drift.make_conjugation_drift(A_REF)
    noise = sde.NoiseModel.isotropic(0.1)
    rng = np.random.default_rng(0)
    g = random_rotation(rng)
    state = PredictionState(g, np.zeros((3, 3)), 0.0)
    np.testing.assert_allclose(h_general(state, model, noise), model.value(g), atol=0.0)
    np.testing.assert_allclose(h_so3(state, model, noise), model.value(g), atol=0.0)


def test_triple_bracket_term_is_inert_for_isotropic_noise():
    model = drift.make_conjugation_drift(A_REF)
    rng = np.random.default_rng(1)
    state = PredictionState(random_rotation(rng), random_cov(rng), 0.0)
    with_noise = h_general(state, model, sde.NoiseModel.isotropic(0.4))
    without = h_general(state, model, sde.NoiseModel.isotropic(0.0))
    np.testing.assert_allclose(with_noise, without, atol=1e-16)


def test_correction_is_linear_in_covariance():
    model = drift.make_conjugation_drift(A_REF)
    noise = sde.NoiseModel.isotropic(0.1)
    rng = np.random.default_rng(2)
    g = random_rotation(rng)
    S = random_cov(rng)
    b = model.value(g)
    corr = h_general(PredictionState(g, S, 0.0), model, noise) - b
    corr2 = h_general(PredictionState(g, 2.0 * S, 0.0), model, noise) - b
    np.testing.assert_allclose(corr2, 2.0 * corr, atol=1e-15)


def test_mean_forms_agree():
    rng = np.random.default_rng(3)
    noise = sde.NoiseModel.isotropic(0.2)
    for _ in range(100):
        A = so3.hat_std(rng.normal(size=3))
        model = drift.make_conjugation_drift(A)
        state = PredictionState(random_rotation(rng), random_cov(rng), 0.0)
        a = h_general(state, model, noise)
        b = h_so3(state, model, noise)
        c = h_connection(state, model, noise)
        assert np.linalg.norm(a - b) <= 1e-14
        assert np.linalg.norm(c - b) <= 1e-12


def test_isotropic_only_forms_reject_anisotropic_noise():
    model = drift.make_conjugation_drift(A_REF)
    aniso = sde.NoiseModel(np.array([[0.1, 0.0, 0.0], [0.0, 0.2, 0.0]]))
    state = PredictionState(E, 0.01 * np.eye(3), 0.0)
    with pytest.raises(moments.NonIsotropicNoise):
        h_so3(state, model, aniso)
    with pytest.raises(moments.NonIsotropicNoise):
        h_connection(state, model, aniso)
    with pytest.raises(moments.NonIsotropicNoise):
        sigma_rhs(state, model, aniso, VARIANT_PAPER)
    # The general forms handle it.
    h_general(state, model, aniso)
    sigma_rhs(state, model, aniso, VARIANT_GENERAL)


def test_conjugation_correction_cancels_exactly():
    # Hessian and bracket-differential contractions are equal term by term.
    model = drift.make_conjugation_drift(A_REF)
    noise = sde.NoiseModel.isotropic(0.1)
    rng = np.random.default_rng(4)
    for _ in range(50):
        g = random_rotation(rng)
        S = random_cov(rng, scale=0.2)
        state = PredictionState(g, S, 0.0)
        h = h_general(state, model, noise)
        assert np.linalg.norm(h - model.value(g)) <= 1e-13


def test_sigma_rhs_closed_forms_on_scaled_identity():
    model = drift.make_constant_drift(np.zeros(3))
    noise = sde.NoiseModel.isotropic(0.3)
    s = 0.02
    state = PredictionState(E, s * np.eye(3), 0.0)
    got7 = sigma_rhs(state, model, noise, VARIANT_GENERAL)
    np.testing.assert_allclose(got7, 0.09 * (1.0 - s / 12.0) * E, atol=1e-15)
    got9 = sigma_rhs(state, model, noise, VARIANT_PAPER)
    np.testing.assert_allclose(got9, (0.09 + s / 4.0) * E, atol=1e-15)
    # From zero covariance both start at sigma^2 I.
    zero = PredictionState(E, np.zeros((3, 3)), 0.0)
    np.testing.assert_allclose(
        sigma_rhs(zero, model, noise, VARIANT_GENERAL), 0.09 * E, atol=1e-16
    )
    np.testing.assert_allclose(
        sigma_rhs(zero, model, noise, VARIANT_PAPER), 0.09 * E, atol=1e-16
    )


def test_sigma_rhs_general_matches_brute_force_bracket_sums():
    # Independent assembly of the same right-hand side from raw brackets.
    rng = np.random.default_rng(5)
    sigmas = rng.normal(size=(4, 3)) * 0.3
    noise = sde.NoiseModel(sigmas)
    model = drift.make_conjugation_drift(A_REF)
    g = random_rotation(rng)
    S = random_cov(rng)
    state = PredictionState(g, S, 0.0)
    got = sigma_rhs(state, model, noise, VARIANT_GENERAL)

    b = model.value(g)
    A = model.differential(g) - so3.ad(b)
    ad2 = sum(so3.ad(s) @ so3.ad(s) for s in sigmas)
    Ap = A + ad2 / 6.0
    expected = sigmas.T @ sigmas + Ap @ S + S @ Ap.T
    for s_i in sigmas:
        adi = so3.ad(s_i)
        expected = expected + 0.25 * adi @ S @ adi.T
    np.testing.assert_allclose(got, expected, atol=1e-14)


def test_integrate_matches_driftless_closed_forms():
    # Scalar ODEs solved exactly: s' = sigma^2 - s * sigma^2 / 12 (general)
    # and s' = sigma^2 + s / 4 (trace form), from s(0) = 0.
    sigma, T = 0.3, 1.5
    model = drift.make_constant_drift(np.zeros(3))
    noise = sde.NoiseModel.isotropic(sigma)
    state0 = PredictionState(np.eye(3), np.zeros((3, 3)), 0.0)

    out7 = integrate(state0, model, noise, T, 600, VARIANT_GENERAL)
    s7 = -12.0 * np.expm1(-sigma * sigma * T / 12.0)
    np.testing.assert_allclose(out7[-1].cov, s7 * E, rtol=1e-8)
    np.testing.assert_allclose(out7[-1].mean, E, atol=1e-14)

    out9 = integrate(state0, model, noise, T, 600, VARIANT_PAPER)
    s9 = 4.0 * sigma * sigma * np.expm1(T / 4.0)
    np.testing.assert_allclose(out9[-1].cov, s9 * E, rtol=1e-8)
    assert out9[-1].t == pytest.approx(T, abs=1e-15)


def test_variant_gap_small_at_reference_scale():
    sigma, T = 0.1, 0.1
    model = drift.make_constant_drift(np.zeros(3))
    noise = sde.NoiseModel.isotropic(sigma)
    state0 = PredictionState(np.eye(3), np.zeros((3, 3)), 0.0)
    c7 = integrate(state0, model, noise, T, 100, VARIANT_GENERAL)[-1].cov
    c9 = integrate(state0, model, noise, T, 100, VARIANT_PAPER)[-1].cov
    gap = np.linalg.norm(c7 - c9) / np.linalg.norm(c7)
    assert gap <= 2e-2


def test_integrate_pure_drift():
    b0 = np.array([0.3, -0.1, 0.2])
    model = drift.make_constant_drift(b0)
    noise = sde.NoiseModel.isotropic(0.0)
    state0 = PredictionState(np.eye(3), np.zeros((3, 3)), 0.0)
    out = integrate(state0, model, noise, 1.0, 50)
    np.testing.assert_allclose(out[-1].mean, so3.group_exp(b0), atol=1e-12)
    assert np.linalg.norm(out[-1].cov) == 0.0


def test_integrate_conjugation_mean_follows_matrix_flow():
    # The mean of the conjugation drift from the identity is exp(t A).
    model = drift.make_conjugation_drift(A_REF)
    noise = sde.NoiseModel.isotropic(0.1)
    state0 = PredictionState(np.eye(3), np.zeros((3, 3)), 0.0)
    out = integrate(state0, model, noise, 0.1, 100, VARIANT_GENERAL)
    for state in out[:: 20]:
        np.testing.assert_allclose(state.mean, expm(state.t * A_REF), atol=1e-12)
    # The correction is inert, so the noisy and noiseless means coincide.
    quiet = integrate(state0, model, sde.NoiseModel.isotropic(0.0), 0.1, 100)
    assert np.linalg.norm(out[-1].mean - quiet[-1].mean) <= 1e-12


def test_integrator_is_fourth_order():
    # A generic nonlinear drift; the conjugation field is integrated exactly
    # and would make this test vacuous.
    def value(g):
        c = so3.group_log(g)
        return np.array(
            [0.8 + np.sin(c[1]), -0.4 + 0.5 * c[0] * c[2], 0.5 - c[1] ** 2]
        )

    model = drift.make_finite_difference_drift(value)
    noise = sde.NoiseModel.isotropic(0.2)
    state0 = PredictionState(np.eye(3), 0.004 * np.eye(3), 0.0)
    T = 0.4
    ref = integrate(state0, model, noise, T, 160)[-1]

    errs = []
    for steps in (8, 16, 32):
        got = integrate(state0, model, noise, T, steps)[-1]
        errs.append(
            so3.distance(got.mean, ref.mean) + np.linalg.norm(got.cov - ref.cov)
        )
    assert errs[0] / errs[1] >= 12.0
    assert errs[1] / errs[2] >= 12.0


def test_integrate_is_gauge_invariant_for_constant_drift():
    # Starting at g0 with a constant field reproduces the identity run
    # left-translated by g0; covariances agree exactly.
    rng = np.random.default_rng(6)
    g0 = random_rotation(rng)
    b0 = np.array([0.4, -0.3, 0.1])
    model = drift.make_constant_drift(b0)
    noise = sde.NoiseModel.isotropic(0.15)
    base = integrate(
        PredictionState(np.eye(3), np.zeros((3, 3)), 0.0), model, noise, 0.2, 40
    )
    moved = integrate(
        PredictionState(g0, np.zeros((3, 3)), 0.0), model, noise, 0.2, 40
    )
    for s_base, s_moved in zip(base, moved):
        assert np.linalg.norm(s_moved.mean - g0 @ s_base.mean) <= 1e-12
        assert np.linalg.norm(s_moved.cov - s_base.cov) <= 1e-12


def test_covariance_stays_symmetric_psd_along_trajectory():
    model = drift.make_conjugation_drift(A_REF)
    noise = sde.NoiseModel.isotropic(0.25)
    state0 = PredictionState(np.eye(3), np.zeros((3, 3)), 0.0)
    for variant in (VARIANT_GENERAL, VARIANT_PAPER):
        for state in integrate(state0, model, noise, 0.5, 100, variant):
            assert np.array_equal(state.cov, state.cov.T)
            assert np.linalg.eigvalsh(state.cov).min() >= -1e-12


def test_covariance_blowup_raises():
    # The trace form has an unstable mode; push it far past the ball.
    model = drift.make_constant_drift(np.zeros(3))
    noise = sde.NoiseModel.isotropic(3.0)
    state0 = PredictionState(np.eye(3), np.zeros((3, 3)), 0.0)
    with pytest.raises(moments.CovarianceBlowup):
        integrate(state0, model, noise, 2.0, 200, VARIANT_PAPER)


def test_integrate_validates_inputs():
    model = drift.make_constant_drift(np.zeros(3))
    noise = sde.NoiseModel.isotropic(0.1)
    with pytest.raises(ValueError):
        integrate(
            PredictionState(2.0 * np.eye(3), np.zeros((3, 3)), 0.0),
            model, noise, 0.1, 10,
        )
    with pytest.raises(ValueError):
        integrate(
            PredictionState(np.eye(3), np.diag([1.0, 1.0, -1.0]), 0.0),
            model, noise, 0.1, 10,
        )
    with pytest.raises(ValueError):
        integrate(
            PredictionState(np.eye(3), np.zeros((3, 3)), 0.0),
            model, noise, 0.1, 0,
        )


def test_fd_drift_trajectory_matches_analytic():
    analytic = drift.make_conjugation_drift(A_REF)
    fd = drift.make_finite_difference_drift(analytic.value)
    noise = sde.NoiseModel.isotropic(0.1)
    state0 = PredictionState(np.eye(3), np.zeros((3, 3)), 0.0)
    out_a = integrate(state0, analytic, noise, 0.1, 50)[-1]
    out_f = integrate(state0, fd, noise, 0.1, 50)[-1]
    assert so3.distance(out_a.mean, out_f.mean) <= 1e-6
    assert np.linalg.norm(out_a.cov - out_f.cov) <= 1e-6


def test_moment_propagator_estimator():
    model = drift.make_conjugation_drift(A_REF)
    est = MomentPropagator(drift=model, sigma=0.1, T=0.1, steps=100)
    params = est.get_params()
    assert params["sigma"] == 0.1 and params["variant"] == VARIANT_GENERAL
    est2 = clone(est).set_params(variant="paper_eq9")
    assert est2.get_params()["variant"] == "paper_eq9"

    est.fit()
    assert len(est.states_) == 101
    np.testing.assert_allclose(est.mean_, expm(0.1 * A_REF), atol=1e-12)
    assert est.covariance_.shape == (3, 3)
    # Defaults run driftless.
    plain = MomentPropagator(sigma=0.3, T=1.5, steps=600).fit()
    s7 = -12.0 * np.expm1(-0.09 * 1.5 / 12.0)
    np.testing.assert_allclose(plain.covariance_, s7 * E, rtol=1e-8)
