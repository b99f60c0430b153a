import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from extito import process_models as pm

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# lines appended by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split("-")[1])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def bm_path():
    return pm.simulate_path(pm.brownian(), 1.0, 1e-3, 123)


@pytest.fixture
def mixed_path():
    return pm.simulate_path(pm.brownian_jumps(1.0, 1.2, scale=0.5), 1.0, 1e-3, 321)


@pytest.fixture
def jump_path():
    return pm.simulate_path(pm.alpha_stable(1.2, delta=0.05), 1.0, 1e-3, 77)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
