"""Algebra and geometry of the rotation group under the Frobenius metric.

Lie-algebra elements are held as coordinate triples in the orthonormal
basis ``G_i = E_i / sqrt(2)``, where ``E_1, E_2, E_3`` are the standard
antisymmetric generators with ``[E_1, E_2] = E_3``.  With the Frobenius
inner product ``<A, B> = tr(A^T B)`` this basis satisfies
``[G_1, G_2] = G_3 / sqrt(2)`` (and cyclically), a rotation by angle
``theta`` about a unit axis ``n`` has coordinates ``sqrt(2) * theta * n``,
and the Riemannian distance is ``sqrt(2)`` times the relative rotation
angle.

All functions are pure and operate on plain numpy arrays: coordinate
vectors of shape ``(3,)``, group elements of shape ``(3, 3)``, and
batched variants with one leading axis.
"""

from __future__ import annotations

import numpy as np

SQRT2 = float(np.sqrt(2.0))

#: Sectional curvature of the group under this metric (constant).
CURVATURE = 0.125

#: Largest radius of a regular geodesic ball: the minimum of the curvature
#: bound pi / (2 sqrt(K)) = pi sqrt(2) and half the injectivity radius.
BALL_RADIUS_MAX = float(np.pi * SQRT2 / 2.0)

_EYE3 = np.eye(3)

# Thresholds for the logarithm branches.
_ANGLE_PI_CUTOFF = np.pi - 1e-6
_ANGLE_SERIES_CUTOFF = 1e-4
_ANGLE_SYMMETRIC_CUTOFF = 3.0


class AngleNearPi(ValueError):
    """Logarithm requested within 1e-6 of the cut locus (angle pi)."""


def ball_constants():
    """Return ``(K, R_max)``: sectional curvature and the largest regular-ball radius."""
    return CURVATURE, BALL_RADIUS_MAX


def hat_std(v):
    """Cross-product matrix of ``v`` in the standard (unscaled) generators."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee_std(m):
    """Axis vector of the antisymmetric part of ``m`` (inverse of :func:`hat_std`)."""
    m = np.asarray(m, dtype=float)
    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def hat(c):
    """Antisymmetric matrix of algebra coordinates, ``hat(c) = sum_i c_i G_i``."""
    return hat_std(np.asarray(c, dtype=float) / SQRT2)


def vee(m):
    """Coordinates of an antisymmetric matrix in the G basis (inverse of :func:`hat`)."""
    return SQRT2 * vee_std(m)


def bracket(u, v):
    """Lie bracket in G coordinates; equals ``cross(u, v) / sqrt(2)``."""
    return np.cross(u, v) / SQRT2


def ad(u):
    """Matrix of ``v -> bracket(u, v)``; antisymmetric for every ``u``."""
    return hat_std(np.asarray(u, dtype=float) / SQRT2)


def _hat_std_many(V):
    n = V.shape[0]
    K = np.zeros((n, 3, 3))
    K[:, 0, 1] = -V[:, 2]
    K[:, 0, 2] = V[:, 1]
    K[:, 1, 0] = V[:, 2]
    K[:, 1, 2] = -V[:, 0]
    K[:, 2, 0] = -V[:, 1]
    K[:, 2, 1] = V[:, 0]
    return K


def vee_many(M):
    """Row-wise :func:`vee` of a stack of antisymmetric matrices, shape ``(n, 3)``."""
    M = np.asarray(M, dtype=float)
    return SQRT2 * 0.5 * np.stack(
        [M[:, 2, 1] - M[:, 1, 2], M[:, 0, 2] - M[:, 2, 0], M[:, 1, 0] - M[:, 0, 1]],
        axis=1,
    )


def group_exp(c):
    """Exponential map of algebra coordinates (Rodrigues formula)."""
    return group_exp_many(np.asarray(c, dtype=float)[None])[0]


def group_exp_many(C):
    """:func:`group_exp` applied to the rows of ``C``; returns shape ``(n, 3, 3)``."""
    C = np.asarray(C, dtype=float)
    W = C / SQRT2
    th = np.linalg.norm(W, axis=1)
    # sinc forms of sin(t)/t and (1 - cos(t))/t^2 are exact at t = 0.
    a = np.sinc(th / np.pi)
    b = 0.5 * np.sinc(0.5 * th / np.pi) ** 2
    K = _hat_std_many(W)
    return _EYE3 + a[:, None, None] * K + b[:, None, None] * (K @ K)


def rotation_angle(g):
    """Rotation angle of ``g`` in [0, pi], well conditioned near both 0 and pi."""
    return float(rotation_angle_many(np.asarray(g, dtype=float)[None])[0])


def rotation_angle_many(G):
    """Row-wise :func:`rotation_angle` of a stack of rotations."""
    G = np.asarray(G, dtype=float)
    cos_th = 0.5 * (np.einsum("nii->n", G) - 1.0)
    sv = 0.5 * np.stack(
        [G[:, 2, 1] - G[:, 1, 2], G[:, 0, 2] - G[:, 2, 0], G[:, 1, 0] - G[:, 0, 1]],
        axis=1,
    )
    return np.arctan2(np.linalg.norm(sv, axis=1), cos_th)


def group_log(g):
    """Logarithm of a rotation in G coordinates.

    Raises
    ------
    AngleNearPi
        If the rotation angle is within 1e-6 of pi, where the logarithm
        is ill conditioned; callers must treat such samples as lying
        outside the regular geodesic ball.
    """
    g = np.asarray(g, dtype=float)
    cos_th = 0.5 * (np.trace(g) - 1.0)
    svec = vee_std(g)  # equals sin(theta) * axis
    sin_th = float(np.linalg.norm(svec))
    th = float(np.arctan2(sin_th, cos_th))
    if th > _ANGLE_PI_CUTOFF:
        raise AngleNearPi(f"rotation angle {th:.9f} is within 1e-6 of pi")
    if th < _ANGLE_SERIES_CUTOFF:
        # theta/sin(theta) expanded to O(theta^6); avoids 0/0 at the identity.
        f = 1.0 + th * th / 6.0 + 7.0 * th**4 / 360.0
        return SQRT2 * f * svec
    if th > _ANGLE_SYMMETRIC_CUTOFF:
        return SQRT2 * th * _axis_from_symmetric_part(g, cos_th, svec)
    return SQRT2 * (th / sin_th) * svec


def _axis_from_symmetric_part(g, cos_th, svec):
    # (g + g^T)/2 = I + (1 - cos)(n n^T - I), so the outer product n n^T is
    # recovered without the sin(theta) term that pollutes g + I near pi.
    M = _EYE3 + (g + g.T - 2.0 * _EYE3) / (2.0 * (1.0 - cos_th))
    j = int(np.argmax(np.diag(M)))
    axis = M[:, j] / np.linalg.norm(M[:, j])
    if float(axis @ svec) < 0.0:
        axis = -axis
    return axis


def group_log_many(G):
    """Row-wise :func:`group_log` of a stack of rotations; returns ``(n, 3)``."""
    G = np.asarray(G, dtype=float)
    cos_th = 0.5 * (np.einsum("nii->n", G) - 1.0)
    sv = 0.5 * np.stack(
        [G[:, 2, 1] - G[:, 1, 2], G[:, 0, 2] - G[:, 2, 0], G[:, 1, 0] - G[:, 0, 1]],
        axis=1,
    )
    sin_th = np.linalg.norm(sv, axis=1)
    th = np.arctan2(sin_th, cos_th)
    if np.any(th > _ANGLE_PI_CUTOFF):
        worst = float(np.max(th))
        raise AngleNearPi(f"rotation angle {worst:.9f} is within 1e-6 of pi")
    f = np.empty_like(th)
    small = th < _ANGLE_SERIES_CUTOFF
    f[small] = 1.0 + th[small] ** 2 / 6.0 + 7.0 * th[small] ** 4 / 360.0
    f[~small] = th[~small] / sin_th[~small]
    out = SQRT2 * f[:, None] * sv
    big = np.nonzero(th > _ANGLE_SYMMETRIC_CUTOFF)[0]
    for j in big:
        out[j] = SQRT2 * th[j] * _axis_from_symmetric_part(G[j], cos_th[j], sv[j])
    return out


def relative_log(y, x):
    """Algebra coordinates of the displacement from ``y`` to ``x``.

    Returns ``group_log(y^T x)``; ``relative_log(y, y) = 0`` and the map is
    invariant under a common left translation of both arguments.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return group_log(y.T @ x)


def distance(y, x):
    """Riemannian distance, ``sqrt(2)`` times the relative rotation angle.

    Defined for every pair, including antipodal rotations where
    :func:`relative_log` refuses to answer.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return SQRT2 * rotation_angle(y.T @ x)


def project_to_so3(m):
    """Nearest rotation to ``m`` in Frobenius norm (det-corrected polar factor)."""
    U, _, Vt = np.linalg.svd(np.asarray(m, dtype=float))
    R = U @ Vt
    if np.linalg.det(R) < 0.0:
        R = (U * np.array([1.0, 1.0, -1.0])) @ Vt
    return R
