import warnings

import pytest
from hypothesis import HealthCheck, settings

from brwre.env import EnvironmentSpec, fixed_offspring, gaussian, poisson

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


@pytest.fixture
def binary_gaussian():
    return EnvironmentSpec.single(fixed_offspring(2), gaussian(0.0, 1.0))


@pytest.fixture
def poisson_gaussian():
    return EnvironmentSpec.single(poisson(2.0), gaussian(0.0, 1.0))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=lambda k: int(k.split()[0])):
        terminalreporter.write_line(mod.RESULTS[key])
