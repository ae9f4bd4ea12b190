import numpy as np
import pytest

from pandora_search.model import SearchInstance

ACCEPTANCE = {}


@pytest.fixture
def instance_a():
    return SearchInstance([[0, 10], [10, 0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record():
    """Record an acceptance verdict: ``record(number, passed, detail)``."""

    def _record(number, passed, detail=""):
        ACCEPTANCE[number] = (bool(passed), detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
