import importlib

import numpy as np
import pytest

from bltp import _pycore
from bltp.quadrature import end_corrections

core = pytest.importorskip("bltp._core")


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_ratio_backends_agree(n):
    x = np.concatenate([np.linspace(0, 30, 30001), np.geomspace(30, 1e4, 500)])
    assert np.max(np.abs(core.ratio_array(n, x) - _pycore.ratio_array(n, x))) < 1e-15


def test_history_sums_backends_agree():
    rng = np.random.default_rng(3)
    n = 400
    t = 0.01 * np.arange(n) - 0.12
    v = 0.4 * np.sin(t[:, None] * np.array([1.0, 2.0, 3.0])) / np.sqrt(3)
    q = np.cumsum(v, axis=0) * 0.01
    base = np.ones(n)
    cl, cr = end_corrections()
    base[:6] += cl
    ks = np.sort(rng.choice(np.arange(20, n), 30, replace=False))
    a = core.history_sums(1.3, ks, t, q, v, base, cr)
    b = _pycore.history_sums(1.3, ks, t, q, v, base, cr)
    for x, y in zip(a, b):
        assert np.max(np.abs(x - y)) < 1e-13 * (1 + np.max(np.abs(y)))


def test_backend_switch(monkeypatch):
    import bltp._backend as backend
    monkeypatch.setenv("BLTP_PURE_PYTHON", "1")
    try:
        assert importlib.reload(backend).BACKEND == "numpy"
    finally:
        monkeypatch.delenv("BLTP_PURE_PYTHON")
        importlib.reload(backend)
    assert backend.BACKEND == "cython"
