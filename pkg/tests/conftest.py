import numpy as np
import pytest

from moebius_fill.gallery import z4 as make_z4

_ACCEPTANCE = []


@pytest.fixture
def z4():
    return make_z4()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
