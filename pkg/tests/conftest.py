import pytest

from helpers import ACCEPTANCE_LINES, build_moons2d, build_toy10


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def moons2d(tmp_path_factory):
    return build_moons2d(tmp_path_factory.mktemp("moons2d"))


@pytest.fixture(scope="session")
def toy10(tmp_path_factory):
    return build_toy10(tmp_path_factory.mktemp("toy10"))


@pytest.fixture(scope="session")
def toy10_natural(toy10):
    return toy10[0]


@pytest.fixture(scope="session")
def toy10_adversarial(toy10):
    return toy10[1]
