"""Input-validation helpers shared by the estimators, config layer, and CLI."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from . import so3

#: Frobenius tolerance on orthonormality and determinant of group elements.
ROTATION_ATOL = 1e-9

#: Smallest admissible covariance eigenvalue.
COV_EIG_FLOOR = -1e-12


def check_rotation_matrix(m, *, atol=ROTATION_ATOL, repair=False):
    """Validate one 3x3 rotation matrix and return it as a float array.

    With ``repair=True`` an invalid matrix is replaced by its polar
    projection instead of raising.
    """
    m = check_array(m, dtype=float, ensure_2d=True)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    err = max(
        float(np.linalg.norm(m.T @ m - np.eye(3))),
        abs(float(np.linalg.det(m)) - 1.0),
    )
    if err > atol:
        if repair:
            return so3.project_to_so3(m)
        raise ValueError(f"matrix is not a rotation within {atol:g} (error {err:.3e})")
    return m


def check_members(X, *, atol=ROTATION_ATOL):
    """Coerce ensemble-like input to a validated float array of shape (n, 3, 3).

    Accepts an object with a ``members`` attribute, an ``(n, 3, 3)`` array,
    or an ``(n, 9)`` array of row-major flattened rotations.
    """
    if hasattr(X, "members"):
        X = X.members
    X = check_array(X, dtype=float, allow_nd=True)
    if X.ndim == 2 and X.shape[1] == 9:
        X = X.reshape(-1, 3, 3)
    if X.ndim != 3 or X.shape[1:] != (3, 3):
        raise ValueError(f"expected shape (n, 3, 3) or (n, 9), got {X.shape}")
    gram_err = np.linalg.norm(
        np.matmul(X.transpose(0, 2, 1), X) - np.eye(3), axis=(1, 2)
    )
    det_err = np.abs(np.linalg.det(X) - 1.0)
    worst = float(max(gram_err.max(), det_err.max()))
    if worst > atol:
        raise ValueError(f"members are not rotations within {atol:g} (error {worst:.3e})")
    return X


def check_covariance_matrix(S, *, sym_atol=1e-8, eig_floor=COV_EIG_FLOOR):
    """Validate a 3x3 covariance matrix; returns the symmetrized copy."""
    S = check_array(S, dtype=float, ensure_2d=True)
    if S.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {S.shape}")
    if float(np.linalg.norm(S - S.T)) > sym_atol:
        raise ValueError("covariance matrix is not symmetric")
    S = 0.5 * (S + S.T)
    lo = float(np.linalg.eigvalsh(S)[0])
    if lo < eig_floor:
        raise ValueError(f"covariance has eigenvalue {lo:.3e} below {eig_floor:g}")
    return S


def check_antisymmetric(A, *, atol=1e-12, exc=ValueError):
    """Validate a 3x3 antisymmetric matrix, raising ``exc`` on failure."""
    A = check_array(A, dtype=float, ensure_2d=True)
    if A.shape != (3, 3):
        raise exc(f"expected a 3x3 matrix, got shape {A.shape}")
    err = float(np.linalg.norm(A + A.T))
    if err > atol:
        raise exc(f"matrix is not antisymmetric within {atol:g} (error {err:.3e})")
    return A
