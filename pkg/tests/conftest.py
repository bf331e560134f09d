import pytest
from hypothesis import HealthCheck, settings

from elecmarket.scenario import load_scenario

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def toy():
    return load_scenario("toy_uk.yaml")


@pytest.fixture(scope="session")
def desk():
    return load_scenario("market_power_desk.yaml")


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
