import numpy as np
import pytest

from lagmhd.state import LagrangianGrid, MaterialParams, make_state


@pytest.fixture
def params():
    return MaterialParams(mu=1.0, lam=2.0, gamma=1.4)


@pytest.fixture
def grid():
    return LagrangianGrid(-4.0, 4.0, 64)


def bump(y, width=1.0, center=0.0):
    return np.exp(-0.5 * ((y - center) / width) ** 2)


def smooth_state(grid, amp=1.0, rho0=None, J=None):
    """A generic smooth, decaying, non-quiescent state on ``grid``."""
    yc, yf = grid.centers, grid.faces
    u = amp * np.sin(yf) * bump(yf)
    u[0] = u[-1] = 0.0
    w = amp * np.stack([0.5 * bump(yf, 0.8, 0.3), np.sin(2 * yf) * bump(yf)], axis=1)
    w[0] = w[-1] = 0.0
    h = amp * np.stack([bump(yc, 0.7), 0.5 * bump(yc, 0.7, -0.4)], axis=1)
    return make_state(
        grid,
        J=1.0 + 0.2 * bump(yc) if J is None else J,
        u=u,
        omega=w,
        h=h,
        P=amp * bump(yc, 1.2),
        rho0=1.0 + 0.3 * np.sin(yc) * bump(yc) if rho0 is None else rho0,
    )


@pytest.fixture
def smooth(grid):
    return smooth_state(grid)


# acceptance criteria register their verdicts here; printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
