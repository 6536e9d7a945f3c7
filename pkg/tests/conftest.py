import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from choquard import energy as en  # noqa: E402
from choquard.grid import Grid  # noqa: E402
from choquard.groundstate import GroundStateSolver  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def gs2():
    """Fast 2D ground state (N=2, alpha=1, p=2, L=8, M=32)."""
    return GroundStateSolver(ndim=2, half_width=8.0, n_points=32).fit().result_


@pytest.fixture(scope="session")
def gs3_64():
    """N=3, alpha=1, p=2, L=16, M=64: enough for construction tests."""
    return GroundStateSolver(ndim=3, half_width=16.0, n_points=64).fit().result_


@pytest.fixture(scope="session")
def gs3_128_timed():
    """The reference instance N=3, alpha=1, p=2, L=16, M=128, with its wall time."""
    t0 = time.perf_counter()
    gs = GroundStateSolver(ndim=3, half_width=16.0, n_points=128).fit().result_
    return gs, time.perf_counter() - t0


@pytest.fixture(scope="session")
def gs3_128(gs3_128_timed):
    return gs3_128_timed[0]


@pytest.fixture(scope="session")
def gs3_wide():
    """Same problem on L=32 (h=0.5) so that shifts up to |zeta|=16 are resolved."""
    return GroundStateSolver(ndim=3, half_width=32.0, n_points=128).fit().result_


@pytest.fixture(scope="session")
def gs4():
    """N=4, alpha=1, p=2, L=14, M=32."""
    return GroundStateSolver(ndim=4, half_width=14.0, n_points=32).fit().result_


def small_problem(ndim=2, m=16, L=4.0, alpha=1.0, p=2.0, **kw):
    return en.Problem(Grid(ndim, m, L), alpha, p, **kw)


def random_field(grid, rng, width=None):
    """Smooth random field: white noise under a Gaussian envelope."""
    width = grid.half_width / 3 if width is None else width
    env = np.exp(-grid.radius() ** 2 / (2 * width**2))
    return env * rng.standard_normal(grid.shape)
