"""Quadrature rules.

Two families live here:

* a batched adaptive Gauss-Kronrod (7/15) integrator, used for every
  history integral evaluated on an interpolated worldline;
* a composite sixth-order rule on a uniform grid, built from 6-point Lagrange
  stencils (centered in the interior, shifted at the ends).  The dynamics
  solver uses it for both the history sums and the cumulative time integrals.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import QuadratureFailure

# ---------------------------------------------------------------------------
# Gauss-Kronrod 7/15 (abscissae on [-1, 1])

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss weights laid out on the same 15 nodes (zero on Kronrod-only nodes)
G_WEIGHTS = np.zeros(15)
G_WEIGHTS[[1, 3, 5]] = _WG[:3]
G_WEIGHTS[[9, 11, 13]] = _WG[2::-1]
G_WEIGHTS[7] = _WG[3]

MAX_LEVEL = 48
CHUNK_PANELS = 4096
MAX_PANELS = 250_000


def split_interval(a, b, max_len):
    """Break ``[a, b]`` into equal panels no longer than ``max_len``."""
    n = max(1, int(np.ceil((b - a) / max_len - 1e-12)))
    edges = np.linspace(a, b, n + 1)
    return edges[:-1], edges[1:]


def adaptive_gk(f, lo, hi, owner, n_owner, ncomp, tol, max_level=MAX_LEVEL):
    """Integrate many panels at once with local bisection.

    Parameters
    ----------
    f : callable
        ``f(x, owner) -> array (len(x), ncomp)`` for flat abscissae ``x`` and
        the integral index each abscissa belongs to.
    lo, hi, owner : arrays
        Initial panels and the integral each panel contributes to.
    tol : float
        Absolute tolerance per integral (max-norm over components); it is
        shared among panels in proportion to their length.

    Returns
    -------
    values : ndarray (n_owner, ncomp)
    errors : ndarray (n_owner,)
        Sum of the accepted Kronrod-Gauss differences.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    owner = np.asarray(owner, dtype=np.intp)
    values = np.zeros((n_owner, ncomp))
    errors = np.zeros(n_owner)
    if lo.size == 0:
        return values, errors
    total = np.bincount(owner, weights=hi - lo, minlength=n_owner)
    level = 0
    while lo.size:
        if level > max_level or lo.size > MAX_PANELS:
            worst = int(owner[0])
            raise QuadratureFailure(
                f"adaptive quadrature did not converge (integral {worst}, "
                f"{lo.size} panels left at level {level})")
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        x = mid[:, None] + half[:, None] * GK_NODES[None, :]
        fx = np.empty((lo.size, 15, ncomp))
        for s in range(0, lo.size, CHUNK_PANELS):
            sl = slice(s, s + CHUNK_PANELS)
            vals = f(x[sl].ravel(), np.repeat(owner[sl], 15))
            fx[sl] = np.asarray(vals, dtype=float).reshape(-1, 15, ncomp)
        kron = half[:, None] * np.einsum("pnc,n->pc", fx, GK_WEIGHTS)
        gauss = half[:, None] * np.einsum("pnc,n->pc", fx, G_WEIGHTS)
        err = np.max(np.abs(kron - gauss), axis=1)
        scale = half * np.max(np.sum(np.abs(fx), axis=1), axis=1)
        allowed = tol * (hi - lo) / np.maximum(total[owner], 1e-300)
        ok = (err <= allowed) | (err <= 1e-14 * scale) | (half <= 1e-15 * np.abs(mid))
        np.add.at(values, owner[ok], kron[ok])
        np.add.at(errors, owner[ok], err[ok])
        bad = ~ok
        lo, mid, hi, owner = lo[bad], mid[bad], hi[bad], owner[bad]
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        owner = np.concatenate([owner, owner])
        level += 1
    return values, errors


def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    return np.polynomial.legendre.leggauss(n)


# ---------------------------------------------------------------------------
# sixth-order composite stencil rule

STENCIL = 6


@lru_cache(maxsize=None)
def _interval_table():
    """``W[o][m] = integral over [o, o+1] of the Lagrange basis on nodes 0..5``."""
    nodes = range(STENCIL)
    table = []
    for o in range(STENCIL - 1):
        row = []
        for m in nodes:
            # coefficients of prod_{k != m} (x - k) / (m - k), lowest power first
            poly = [Fraction(1)]
            denom = Fraction(1)
            for k in nodes:
                if k == m:
                    continue
                poly = [Fraction(0)] + poly
                for i in range(len(poly) - 1):
                    poly[i] -= k * poly[i + 1]
                denom *= m - k
            integral = sum(c * (Fraction(o + 1) ** (i + 1) - Fraction(o) ** (i + 1)) / (i + 1)
                           for i, c in enumerate(poly))
            row.append(integral / denom)
        table.append(row)
    return tuple(tuple(r) for r in table)


INTERVAL_WEIGHTS = np.array([[float(c) for c in row] for row in _interval_table()])
_CENTER = 2


def stencil_start(i, last):
    """First node of the stencil for interval ``[i, i+1]`` when nodes ``0..last`` exist."""
    return min(max(i - _CENTER, 0), last - (STENCIL - 1))


def interval_integrals(values, intervals, last, h):
    """Integrals of ``values`` over the listed unit intervals.

    ``values`` holds samples at nodes ``0..last`` (extra rows are ignored);
    the result has one row per interval.
    """
    if last < STENCIL - 1:
        raise ValueError("need at least six nodes for the stencil rule")
    intervals = np.asarray(intervals, dtype=np.intp)
    starts = np.minimum(np.maximum(intervals - _CENTER, 0), last - (STENCIL - 1))
    offsets = intervals - starts
    idx = starts[:, None] + np.arange(STENCIL)[None, :]
    w = INTERVAL_WEIGHTS[offsets]
    vals = np.asarray(values)[idx]
    return h * np.einsum("im,im...->i...", w, vals)


def composite_weights(last):
    """Node weights (in units of h) for the integral over nodes ``0..last``."""
    w = np.zeros(last + 1)
    for i in range(last):
        s = stencil_start(i, last)
        w[s:s + STENCIL] += INTERVAL_WEIGHTS[i - s]
    return w


@lru_cache(maxsize=None)
def _end_corrections():
    n = 40
    w = composite_weights(n) - 1.0
    left = w[:STENCIL].copy()
    right = w[::-1][:STENCIL].copy()
    return left, right


def end_corrections():
    """``(cL, cR)``: weights are ``1 + cL[j] + cR[last - j]`` for ``last >= MIN_ADDITIVE``."""
    left, right = _end_corrections()
    return left.copy(), right.copy()


MIN_ADDITIVE = 6
