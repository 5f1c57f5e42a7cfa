import numpy as np
import pytest

from ovsde import barrier
from ovsde.model import ModelParams, State


@pytest.fixture(scope="session")
def canonical():
    """Desk-scale parameter set used throughout (mirrors configs/canonical.json)."""
    return ModelParams(alpha=1.0, beta=1.0, d=1.0, v_circ=0.9, x_circ=1.0, y_circ=0.0)


@pytest.fixture(scope="session")
def table(canonical):
    return barrier.build_barrier(canonical)


@pytest.fixture(scope="session")
def ic_grid_small():
    """12 initial conditions spanning the stable basin, for property checks."""
    xs = np.linspace(0.1, 3.0, 4)
    ys = np.linspace(-2.0, 2.0, 3)
    return [State(float(x), float(y)) for x in xs for y in ys]
