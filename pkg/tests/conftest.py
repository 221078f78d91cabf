import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bltp.fields import Particle
from bltp.worldline import Worldline, smooth_kick

settings.register_profile("bltp", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("bltp")


@pytest.fixture(scope="session")
def rest_particle():
    return Particle(1.0, 1.0, 1.0, Worldline.at_rest((0.0, 0.0, 0.0), 0.0, 40.0, 0.1))


@pytest.fixture(scope="session")
def kicked():
    """Rest until 0, then a smooth ramp to |v| = 0.3 over 2/kappa."""
    return Particle(1.0, 1.0, 1.0, smooth_kick(0.3, 2.0, (1.0, 2.0, 2.0), 0.0, 12.0, 0.01))


@pytest.fixture(scope="session")
def kicked_fast():
    """Ramp to |v| = 0.5, used by the gauge criterion."""
    return Particle(1.0, 1.0, 1.0, smooth_kick(0.5, 1.5, (0.0, 1.0, 0.0), 0.0, 10.0, 0.01))


def random_unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
