import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from roughflow.rough_path import Grid, QCovariance, assemble_qfbm, lift_piecewise_linear  # noqa: E402
from roughflow.semigroup import dirichlet_laplacian  # noqa: E402


@pytest.fixture
def small_rp():
    """Two-dimensional fBm lift, H = 0.45, 32 cells on [0, 1]."""
    g = Grid.dyadic(0.0, 1.0, 5)
    return lift_piecewise_linear(assemble_qfbm(QCovariance([1.0, 0.5]), 0.45, g, 3), 0.4)


@pytest.fixture
def sg4():
    return dirichlet_laplacian(4, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, name: str, passed: bool, detail: str) -> None:
    """Store and print one acceptance line; shown again in the terminal summary."""
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
