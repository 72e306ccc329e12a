import numpy as np
import pytest

_CRITERIA = {}


def record_criterion(number, title, passed, detail):
    """Store one acceptance verdict; printed in the terminal summary."""
    _CRITERIA[number] = (title, bool(passed), detail)


@pytest.fixture
def criterion():
    return record_criterion


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
