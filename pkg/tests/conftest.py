import pytest

from xxzbound import selfenergy
from xxzbound.model import ReservoirSpec

ACCEPTANCE_LINES = []


@pytest.fixture
def canon():
    """eta=0.1, s=1, omega_c=3 in units of J."""
    return ReservoirSpec(eta=0.1, s=1.0, omega_c=3.0)


@pytest.fixture
def acceptance():
    def record(criterion, passed, detail):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


@pytest.fixture(autouse=True)
def _fresh_cache():
    yield
    selfenergy.clear_cache()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
