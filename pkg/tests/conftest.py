import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cartan_toeplitz.matdomain import RngStream, haar_unitaries, sample_domain_batch
from cartan_toeplitz.montecarlo import MCConfig, cached_samples

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SEED = 12345

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def cfg2():
    return MCConfig(200_000, SEED)


@pytest.fixture(scope="session")
def samples2(cfg2):
    return cached_samples(2, cfg2)


@pytest.fixture(scope="session")
def samples1():
    return cached_samples(1, MCConfig(200_000, SEED))


def random_unitary(n, seed):
    return haar_unitaries(n, 1, RngStream(seed, 0, 99))[0]


def random_points(n, count, seed):
    return sample_domain_batch(n, count, RngStream(seed, 0, 98)).points
