import pytest
from hypothesis import HealthCheck, settings

from hyplat.halfplane import I_POINT
from hyplat.lattice import BallQuery, collect, make_group

settings.register_profile("hyplat", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("hyplat")


@pytest.fixture(scope="session")
def sl2z():
    return make_group("SL2Z")


@pytest.fixture(scope="session")
def sl2z_million(sl2z):
    """The SL2(Z) orbit of i in the cosh-ball of radius 10^6, canonically ordered."""
    return collect(BallQuery.lattice(sl2z, I_POINT, I_POINT, 1e6))


def pytest_terminal_summary(terminalreporter):
    import verdicts

    if verdicts.LINES:
        terminalreporter.section("acceptance criteria")
        for line in verdicts.LINES:
            terminalreporter.write_line(line)
