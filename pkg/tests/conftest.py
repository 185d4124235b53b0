import pytest

from _support import ACCEPTANCE_LINES
from dcds import load_corpus


@pytest.fixture
def corpus():
    return load_corpus


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
