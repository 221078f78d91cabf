"""Pure-numpy implementations of the hot kernels.

Signatures match the compiled ``_core`` extension exactly.
"""

import numpy as np

from .bessel import _ratio_array

NAME = "numpy"


def ratio_array(n, x):
    """Vectorised ``J_n(x)/x**n`` for ``n`` in 0..3."""
    x = np.ascontiguousarray(x, dtype=float)
    return _ratio_array(n, x.ravel()).reshape(x.shape)


def history_sums(kappa, ks, t, q, v, base, corr):
    """Raw self-field sums at the grid nodes ``ks``.

    For each node ``k`` with ``dt = t[k]-t[j]`` and ``dq = q[k]-q[j]``::

        SE = sum_j w_kj G(j) (dq - v[j] dt)
        SB = sum_j w_kj G(j) (v[j] x dq)

    with ``G = J_2(kappa D)/(kappa D)**2`` and ``w_kj = base[j] + corr[k-j]``
    (the correction only for ``k - j < len(corr)``).
    """
    ks = np.asarray(ks, dtype=np.intp)
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    base = np.asarray(base, dtype=float)
    corr = np.asarray(corr, dtype=float)
    SE = np.zeros((ks.size, 3))
    SB = np.zeros((ks.size, 3))
    for i, k in enumerate(ks):
        dt = t[k] - t[:k + 1]
        dq = q[k] - q[:k + 1]
        d2 = np.maximum(dt * dt - np.einsum("ij,ij->i", dq, dq), 0.0)
        G = _ratio_array(2, kappa * np.sqrt(d2))
        w = base[:k + 1].copy()
        m = min(corr.size, k + 1)
        w[k + 1 - m:] += corr[:m][::-1]
        wg = w * G
        SE[i] = wg @ (dq - v[:k + 1] * dt[:, None])
        SB[i] = wg @ np.cross(v[:k + 1], dq)
    return SE, SB
