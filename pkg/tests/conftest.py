import numpy as np
import pytest

from entroball.domain import BoxDomain, draw_batch, make_uniform_prior

M_DEFAULT = 50_000


@pytest.fixture(scope="session")
def square():
    return BoxDomain.unit(2)


@pytest.fixture(scope="session")
def interval():
    return BoxDomain.unit(1)


@pytest.fixture(scope="session")
def square_batch(square):
    return draw_batch(make_uniform_prior(square), M_DEFAULT, seed=0)


@pytest.fixture(scope="session")
def interval_batch(interval):
    return draw_batch(make_uniform_prior(interval), M_DEFAULT, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
