import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")

# (item, passed, detail) lines reported by test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one criterion's outcome; the line is printed in the terminal summary."""

    def record(item, passed, detail):
        ACCEPTANCE_LINES.append((item, bool(passed), detail))
        print(f"criterion {item}: {'PASS' if passed else 'FAIL'}  {detail}")
        assert passed, detail

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for item, passed, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {item:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
