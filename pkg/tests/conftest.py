import numpy as np
import pytest

ACCEPTANCE = []  # (criterion, passed, detail), filled by test_acceptance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    def record(n, passed, detail):
        ACCEPTANCE.append((n, bool(passed), detail))
        print(f"criterion {n}: {'PASS' if passed else 'FAIL'} {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
