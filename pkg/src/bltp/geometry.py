"""Minkowski-space primitives.

Conventions: signature (-,+,+,+), c = 1, four-vectors are length-4 arrays of
contravariant components ``x^a = (t, x, y, z)``.  Field tensors are stored
covariantly, ``F_{i0} = E_i`` and ``F_{ij} = eps_{ijk} B_k``.
"""

from __future__ import annotations

import numpy as np

from .errors import SpacelikeSeparation

METRIC = np.diag([-1.0, 1.0, 1.0, 1.0])

# index pairs (i, j) with F_{ij} = B_k, in the order k = 1, 2, 3
_B_PAIRS = ((2, 3), (3, 1), (1, 2))


def minkowski_dot(a, b):
    """Return ``g_{ab} a^a b^b``; broadcasts over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def lower(v):
    """Lower (or raise) the index of a four-vector: flip the sign of component 0."""
    out = np.array(v, dtype=float, copy=True)
    out[..., 0] = -out[..., 0]
    return out


def lorentz_distance(x, tol=1e-12):
    """Lorentz distance ``sqrt(-x.x)`` of a causal separation.

    Separations with ``|x.x| <= tol * (1 + x0**2)`` count as null and give 0.

    Raises
    ------
    SpacelikeSeparation
        If ``-x.x`` is negative beyond the light-cone tolerance.
    """
    x = np.asarray(x, dtype=float)
    d2 = -minkowski_dot(x, x)
    slack = tol * (1.0 + x[..., 0] ** 2)
    if np.any(d2 < -slack):
        raise SpacelikeSeparation(f"spacelike separation: x.x = {np.max(-d2):.3e}")
    return np.sqrt(np.where(np.abs(d2) <= slack, 0.0, np.maximum(d2, 0.0)))


def antisym_outer(T, U):
    """``T_[a U_b] = T_a U_b - T_b U_a`` (no factor 1/2)."""
    T = np.asarray(T, dtype=float)
    U = np.asarray(U, dtype=float)
    outer = T[..., :, None] * U[..., None, :]
    return outer - np.swapaxes(outer, -1, -2)


class FieldTensorValue:
    """Antisymmetric rank-2 tensor held as its six independent components.

    ``E`` and ``B`` are read from the covariant components; the full matrices
    are rebuilt on demand, so antisymmetry is exact.
    """

    __slots__ = ("E", "B")

    def __init__(self, E, B):
        self.E = np.array(E, dtype=float).reshape(3)
        self.B = np.array(B, dtype=float).reshape(3)

    @classmethod
    def from_covariant(cls, F):
        F = np.asarray(F, dtype=float)
        E = F[1:, 0].copy()
        B = np.array([F[i, j] for i, j in _B_PAIRS])
        return cls(E, B)

    @classmethod
    def from_contravariant(cls, F):
        return cls.from_covariant(raise_tensor(F))

    @property
    def covariant(self):
        F = np.zeros((4, 4))
        F[1:, 0] = self.E
        F[0, 1:] = -self.E
        for k, (i, j) in enumerate(_B_PAIRS):
            F[i, j] = self.B[k]
            F[j, i] = -self.B[k]
        return F

    @property
    def contravariant(self):
        return raise_tensor(self.covariant)

    def __getitem__(self, idx):
        return self.covariant[idx]

    def __add__(self, other):
        return FieldTensorValue(self.E + other.E, self.B + other.B)

    def __mul__(self, s):
        return FieldTensorValue(self.E * s, self.B * s)

    __rmul__ = __mul__

    def __repr__(self):
        return f"FieldTensorValue(E={self.E.tolist()}, B={self.B.tolist()})"


def raise_tensor(F):
    """Raise (or lower) both indices of a rank-2 tensor."""
    F = np.array(F, dtype=float, copy=True)
    F[..., 0, :] *= -1.0
    F[..., :, 0] *= -1.0
    return F


def tensor_from_eb(E, B):
    return FieldTensorValue(E, B)


def eb_from_tensor(F):
    """Return ``(E, B)`` from a FieldTensorValue or a covariant 4x4 array."""
    if not isinstance(F, FieldTensorValue):
        F = FieldTensorValue.from_covariant(F)
    return F.E.copy(), F.B.copy()


def four_velocity(v):
    v = np.asarray(v, dtype=float)
    gamma = 1.0 / np.sqrt(1.0 - np.sum(v * v, axis=-1))
    return np.concatenate([gamma[..., None], gamma[..., None] * v], axis=-1)


def boost(v):
    """Contravariant boost matrix to the frame moving with 3-velocity ``v``.

    ``boost(v) @ four_velocity(v)`` is ``(1, 0, 0, 0)``; ``boost(-v)`` is the inverse.
    """
    v = np.asarray(v, dtype=float)
    v2 = float(v @ v)
    L = np.eye(4)
    if v2 == 0.0:
        return L
    gamma = 1.0 / np.sqrt(1.0 - v2)
    L[0, 0] = gamma
    L[0, 1:] = -gamma * v
    L[1:, 0] = -gamma * v
    L[1:, 1:] += (gamma - 1.0) * np.outer(v, v) / v2
    return L
