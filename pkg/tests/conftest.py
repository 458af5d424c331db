import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from scatterlab.filterbank import build_filter_bank

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_log(request):
    """Collect one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return request.config.stash[_ACCEPTANCE_KEY]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bank256():
    return build_filter_bank(256, 4)


@pytest.fixture(scope="session")
def bank512():
    return build_filter_bank(512, 5)


@pytest.fixture(scope="session")
def bank1024():
    return build_filter_bank(1024, 6)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
