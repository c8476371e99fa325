import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from correspondence.model import CorrespondenceGrids  # noqa: E402
from correspondence.sampling import fit_oracle_model  # noqa: E402
from optics.rig import desk_rig  # noqa: E402
from simulation.demo_scenes import colorchecker_scene  # noqa: E402
from spectra.curves import default_efficiency, default_responses  # noqa: E402
from spectra.grid import WavelengthGrid  # noqa: E402


@pytest.fixture(scope="session")
def grid():
    """Coarse 10 nm grid, 24 samples."""
    return WavelengthGrid(430.0, 660.0, 10.0)


@pytest.fixture(scope="session")
def desk():
    return desk_rig()


@pytest.fixture(scope="session")
def responses(grid):
    return default_responses(grid)


@pytest.fixture(scope="session")
def eta(grid):
    return default_efficiency(grid)


@pytest.fixture(scope="session")
def small_grids(desk):
    """8 × 8 lattice over the desk camera, default wavelength knots and depths."""
    return CorrespondenceGrids.for_camera(desk.camera, rows=8, cols=8)


@pytest.fixture(scope="session")
def small_model(desk, small_grids):
    return fit_oracle_model(desk, small_grids)


@pytest.fixture(scope="session")
def tiny_scene(grid):
    """16 × 16 ColorChecker corner of the desk camera at 800 mm."""
    return colorchecker_scene((16, 16), 800.0, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
