import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sgtumor.grid import GridSpec  # noqa: E402
from sgtumor.scenarios import make_scenario  # noqa: E402

# overrides that remove every z-dependence from the catalogue scenarios
FROZEN = {
    "testIa": dict(spread=0.0, core_z=0.0, rim_z=0.0, G0_z=0.0),
    "testII": dict(r1_z=0.0, r2_z=0.0, amp_z=0.0, G0_z=0.0),
    "testIII": dict(r1_z=0.0, r2_z=0.0, r3_z=0.0, r4_z=0.0, total_z=0.0, dead_z=0.0,
                    a_z=0.0, b_z=0.0, d_z=0.0),
}

# a 16 x 16 grid that still holds every initial support two cells from the wall
SMALL = dict(a=-1.6, b=1.6, dx=0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_grid():
    return GridSpec(-1.2, 1.2, 16, 16)


def small_scenario(name, **extra):
    return make_scenario(name, dict(SMALL, **extra))


def bump(grid, amp=0.6, width=0.5):
    X, Y = grid.mesh
    return amp * np.clip(1 - (X * X + Y * Y) / width**2, 0, None)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = []


def record(criterion, ok, detail=""):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
