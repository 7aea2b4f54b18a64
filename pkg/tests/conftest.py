import pytest

from rugose.geometry import DomainSpec, Mode, make_profile

ACCEPTANCE = []


@pytest.fixture
def flat():
    return make_profile("flat", 1.0)


@pytest.fixture
def riblet():
    return make_profile("riblet", 1.0, 0.5)


@pytest.fixture
def eggcarton():
    return make_profile("eggcarton", 1.0, 0.5, 0.5)


def spec(eps, profile, mode=Mode.PLANAR25D):
    return DomainSpec(eps, profile, mode)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
