import pytest

from lmvol.moments import power_law_model

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def pl075():
    return power_law_model(0.75)


@pytest.fixture(scope="session")
def pl15():
    return power_law_model(1.5)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
