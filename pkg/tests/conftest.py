"""
Shared fixtures: reference models, bundled model files and small quadrature grids
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.averaging.quadrature import QuadratureGrid
from src.lab import catalog

MODELS_DIR = PROJECT_ROOT / "data" / "models"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs the conjugate detector over 100 orbits")


@pytest.fixture(scope="session")
def models_dir() -> Path:
    return MODELS_DIR


@pytest.fixture(scope="session")
def flat_free():
    return catalog.flat_free()


@pytest.fixture(scope="session")
def constant_field():
    return catalog.constant_field(1.0)


@pytest.fixture(scope="session")
def flat_exact():
    return catalog.flat_exact()


@pytest.fixture(scope="session")
def mixed():
    return catalog.mixed()


@pytest.fixture(scope="session")
def conformal_n3():
    return catalog.conformal_potential(3)


@pytest.fixture(scope="session")
def suite():
    return catalog.gauge_suite()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_grid():
    """Build a coarse grid for a model: default torus size, low sphere order"""
    def build(model, size=None):
        order = 16 if model.dim == 2 else 4
        return QuadratureGrid.for_model(model, size, order)
    return build


@pytest.fixture
def start():
    """q = 0 moving along e_1 on a flat level"""
    from src.dynamics.trajectory import PhasePoint
    return PhasePoint(np.zeros(2), np.array([1.0, 0.0]))
