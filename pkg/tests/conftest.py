import pytest

from rigidity_lab.geometry import model_ball

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def flat_disk():
    return model_ball("euclidean", n=2, R=1.0, m=1024)


@pytest.fixture(scope="session")
def sphere_disk():
    return model_ball("sphere", n=2, R=1.0, m=1024, kappa=1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
