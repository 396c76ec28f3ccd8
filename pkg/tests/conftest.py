import pytest

from stein_hellinger.dists import DistributionSpec
from stein_hellinger.numerics import RngStream

CRITERIA = []


@pytest.fixture(scope="session")
def beta55():
    return DistributionSpec.shifted_beta(5, 5, 1.0, 2.0)


@pytest.fixture
def rng():
    return RngStream(20240601)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
