import os
import pathlib

import pytest

# Set environment variables for testing BEFORE importing any app modules
# so config.Settings picks up the test guards instead of a developer's .env
os.environ["USOLAB_GUARD"] = "4096"
os.environ["USOLAB_ENUM_BITS"] = "24"
os.environ["USOLAB_SWEEP_MAX_EDGES"] = "12"
os.environ["USOLAB_SWEEP_SAMPLE"] = "32"
os.environ["USOLAB_WORKERS"] = "1"
os.environ["USOLAB_LOG_LEVEL"] = "WARNING"

from grid_core import make_grid
from models import Outmap

DATA_DIR = pathlib.Path(__file__).resolve().parent.parent / "data"

# Layered grid USO on blocks {1,2},{3,4},{5,6,7}: block 3 ordered 7 < 5 < 6, each layer a 2D product
FIGURE4_TABLE = {
    (1, 3, 5): {7},
    (1, 4, 5): {3, 7},
    (2, 3, 5): {1, 7},
    (2, 4, 5): {1, 3, 7},
    (1, 3, 6): {2, 4, 5, 7},
    (1, 4, 6): {2, 5, 7},
    (2, 3, 6): {4, 5, 7},
    (2, 4, 6): {5, 7},
    (1, 3, 7): {4},
    (1, 4, 7): set(),
    (2, 3, 7): {1, 4},
    (2, 4, 7): {1},
}


@pytest.fixture
def grid_2x2():
    return make_grid([2, 2])


@pytest.fixture
def figure4_grid():
    return make_grid([2, 2, 3])


@pytest.fixture
def figure4_sigma(figure4_grid):
    return Outmap.from_table(figure4_grid, FIGURE4_TABLE)


@pytest.fixture
def two_sinks(grid_2x2):
    """Consistent orientation with sinks at (1,3) and (2,4)."""
    return Outmap.from_table(grid_2x2, {
        (1, 3): set(),
        (1, 4): {2, 3},
        (2, 3): {1, 4},
        (2, 4): set(),
    })


@pytest.fixture
def four_cycle(grid_2x2):
    """Consistent orientation whose edges form a directed 4-cycle."""
    return Outmap.from_table(grid_2x2, {
        (1, 3): {2},
        (2, 3): {4},
        (2, 4): {1},
        (1, 4): {3},
    })


@pytest.fixture
def inconsistent_edge(grid_2x2):
    """Both endpoints of the edge (1,3) -- (2,3) claim it as outgoing."""
    return Outmap.from_table(grid_2x2, {
        (1, 3): {2},
        (2, 3): {1},
        (1, 4): {3},
        (2, 4): {3},
    })


@pytest.fixture
def figure4_path():
    return str(DATA_DIR / "figure4.json")
