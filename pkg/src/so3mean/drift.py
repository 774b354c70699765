"""Drift fields on the rotation group with first and second derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import so3, validation

_E = np.eye(3)

#: Central-difference steps balancing truncation against rounding in doubles.
FD_STEP_FIRST = 1e-4
FD_STEP_SECOND = 1e-3


class NotAntisymmetric(ValueError):
    """Conjugation drift requested for a matrix that is not antisymmetric."""


@dataclass(eq=False)
class DriftModel:
    """A drift ``b`` with its derivatives along group directions.

    ``value(g)`` returns the algebra coordinates of ``b(g)``.
    ``differential(g)`` returns the 3x3 matrix ``D`` with
    ``D @ u = d/dt b(g exp(t u))`` at ``t = 0``.  ``hessian(g)`` returns the
    ``(3, 3, 3)`` tensor ``H`` with ``H[:, a, c]`` the polarized second
    derivative along the basis pair ``(e_a, e_c)``, symmetric in ``(a, c)``.
    ``kind`` is ``"analytic"`` or ``"finite-difference"``.
    """

    value: Callable[[np.ndarray], np.ndarray]
    differential: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    kind: str = "analytic"
    value_many: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def values(self, G):
        """Batched ``value`` over a stack of group elements, shape ``(n, 3)``."""
        if self.value_many is not None:
            return self.value_many(G)
        return np.stack([self.value(g) for g in G])


def make_conjugation_drift(A):
    """Drift ``g -> coordinates of g^T A g`` for an antisymmetric matrix ``A``.

    The differential along ``u`` is ``bracket(b(g), u)`` and the second
    derivative polarizes to ``(u, v) -> ([[b,u],v] + [[b,v],u]) / 2``.
    """
    A = validation.check_antisymmetric(A, exc=NotAntisymmetric)

    def value(g):
        return so3.vee(g.T @ A @ g)

    def value_many(G):
        G = np.asarray(G, dtype=float)
        return so3.vee_many(G.transpose(0, 2, 1) @ A @ G)

    def differential(g):
        return so3.ad(value(g))

    def hessian(g):
        b = value(g)
        H = np.empty((3, 3, 3))
        for a in range(3):
            ba = so3.bracket(b, _E[a])
            for c in range(3):
                bc = so3.bracket(b, _E[c])
                H[:, a, c] = 0.5 * (so3.bracket(ba, _E[c]) + so3.bracket(bc, _E[a]))
        return H

    return DriftModel(value, differential, hessian, "analytic", value_many)


def make_constant_drift(b0):
    """Drift with constant value ``b0`` (use zeros for the driftless case)."""
    b0 = np.asarray(b0, dtype=float).copy()

    def value(g):
        return b0.copy()

    def value_many(G):
        return np.broadcast_to(b0, (len(G), 3)).copy()

    def differential(g):
        return np.zeros((3, 3))

    def hessian(g):
        return np.zeros((3, 3, 3))

    return DriftModel(value, differential, hessian, "analytic", value_many)


def make_finite_difference_drift(value, delta=FD_STEP_FIRST, delta2=FD_STEP_SECOND):
    """Wrap a coordinate-valued drift with central-difference derivatives."""
    if delta <= 0.0 or delta2 <= 0.0:
        raise ValueError("finite-difference steps must be positive")

    def differential(g):
        D = np.empty((3, 3))
        for a in range(3):
            fp = value(g @ so3.group_exp(delta * _E[a]))
            fm = value(g @ so3.group_exp(-delta * _E[a]))
            D[:, a] = (fp - fm) / (2.0 * delta)
        return D

    def hessian(g):
        H = np.empty((3, 3, 3))
        for a in range(3):
            for c in range(a, 3):
                wp = delta2 * (_E[a] + _E[c])
                wm = delta2 * (_E[a] - _E[c])
                fp = value(g @ so3.group_exp(wp)) + value(g @ so3.group_exp(-wp))
                fm = value(g @ so3.group_exp(wm)) + value(g @ so3.group_exp(-wm))
                H[:, a, c] = (fp - fm) / (4.0 * delta2 * delta2)
                H[:, c, a] = H[:, a, c]
        return H

    return DriftModel(value, differential, hessian, "finite-difference")
