import sys

import pytest

from phifam.fixtures import constant_family, identity_family, power_family, triangular_exponential_pair


@pytest.fixture(scope="session")
def identity():
    return identity_family()


@pytest.fixture(scope="session")
def half_power():
    return power_family(0.5)


@pytest.fixture(scope="session")
def constant():
    return constant_family()


@pytest.fixture(scope="session")
def triangle_pair():
    return triangular_exponential_pair()


@pytest.fixture(scope="session", params=["identity", "half_power", "constant"])
def any_family(request):
    return request.getfixturevalue(request.param)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
