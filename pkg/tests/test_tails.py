import mpmath
import numpy as np
import pytest
from scipy import special

from bltp.tails import complete_integrals, rest_tail, tail_integrals


def _mp_tail(order, power, kappa, r, w0):
    """Oracle: mpmath oscillatory quadrature of J_order(kw) / (w^power sqrt(w^2 + r^2)) over [w0, inf)."""
    f = lambda w: mpmath.besselj(order, kappa * w) / (w**power * mpmath.sqrt(w * w + r * r))
    with mpmath.workdps(25):
        if w0 > 0:
            return float(mpmath.quadosc(f, [w0, mpmath.inf], omega=kappa))
        return float(mpmath.quad(f, [0, 1]) + mpmath.quadosc(f, [1, mpmath.inf], omega=kappa))


@pytest.mark.parametrize("kappa, r, w0", [(1.0, 0.5, 0.0), (1.0, 2.0, 1.5), (2.0, 0.05, 3.0), (0.7, 5.0, 0.2)])
def test_tail_integrals_against_mpmath(kappa, r, w0):
    IA, IF, I3, err = tail_integrals(kappa, r, w0)
    assert IF[0] == pytest.approx(_mp_tail(2, 1, kappa, r, w0), abs=1e-12)
    assert I3[0] == pytest.approx(_mp_tail(3, 2, kappa, r, w0), abs=1e-12)
    assert IA[0] == pytest.approx(_mp_tail(1, 0, kappa, r, w0), abs=1e-12)
    assert err[0] < 1e-11


def test_complete_integrals_closed_forms():
    kappa, r = 1.3, np.array([0.01, 0.4, 3.0, 25.0])
    IA, IF, I3 = complete_integrals(kappa, r)
    assert np.allclose(IA, (1 - np.exp(-kappa * r)) / (kappa * r), rtol=1e-14)
    z = kappa * r / 2
    P = lambda nu: special.iv(nu / 2, z) * special.kv(nu / 2, z)
    assert np.allclose(IF, kappa / 4 * (P(1) + P(3)), rtol=1e-12)
    assert np.allclose(I3, kappa**2 * (P(1) / 24 + P(3) / 16 + P(5) / 48), rtol=1e-12)


def test_rest_tail_future_point_sees_static_yukawa():
    kappa, r = 1.0, 2.0
    tail = rest_tail(kappa, np.array([[r, r, 0.0, 0.0]]))
    # kappa^2 int J1(kD)/(kD) dt over the whole rest epoch
    assert tail["QA"][0, 0] == pytest.approx(kappa * (1 - np.exp(-kappa * r)) / (kappa * r), rel=1e-13)
    assert np.all(tail["QB"] == 0)
    assert tail["Q3"].shape == (1, 4, 4, 4)
    assert np.allclose(tail["Q3"], -np.swapaxes(tail["Q3"], 2, 3), atol=0)
