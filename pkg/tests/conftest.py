import numpy as np
import pytest

from hamsim.linalg import make_rng


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(20240601)


X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)

# One line per acceptance criterion, echoed in the terminal summary so the
# verdicts stay visible even when pytest captures test output.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
