import pytest

from freeladder import PriceSchedule

# Frozen from a brute-force loop over every position (tests/oracles.py),
# cross-checked with a 40-digit mpmath evaluation of the same formula.
PLATINUM_THRESHOLD = 1_003_456
PLATINUM_TOTAL_CENTS = 29_514_452
INVERSE_THRESHOLD = 4_314_861
INVERSE_SUB_DOLLAR_POSITIONS = 3_960_446


@pytest.fixture
def platinum():
    """The $1.50 album with beta = 1/200000."""
    return PriceSchedule(1.51, 0.01, 1 / 200_000)


@pytest.fixture
def inverse_schedule():
    return PriceSchedule(1.51, 0.01, 1 / 860_000)


@pytest.fixture
def tiny():
    """A desk-scale good: free after a few hundred buyers."""
    return PriceSchedule(1.51, 0.01, 1 / 200)


# -- acceptance reporting ------------------------------------------------------

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}")
