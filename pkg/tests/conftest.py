import pytest

from fiiss.sampling import RandomSource

CRITERION_LINES: list[str] = []


@pytest.fixture
def src():
    return RandomSource(12345, 0)


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
