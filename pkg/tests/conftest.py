from pathlib import Path

import numpy as np
import pytest

from acouwave.basis import RectDomain, SpectralGrid
from acouwave.config import load_config
from acouwave.constants import estimate_constants
from acouwave.nondim import IbvpCoefficients

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def pytest_configure(config):
    config.addinivalue_line("filterwarnings", "ignore::acouwave.linear_solver.RadiusWarning")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def unit_square():
    return RectDomain((1.0, 1.0))


@pytest.fixture(scope="session")
def grid2d(unit_square):
    return SpectralGrid(unit_square, (6, 5))


@pytest.fixture(scope="session")
def grid1d():
    return SpectralGrid(RectDomain((1.0,)), 10)


@pytest.fixture(scope="session")
def small_coeffs():
    return IbvpCoefficients(mu=0.1, eta=0.1, eps=0.01)


@pytest.fixture(scope="session")
def small_data_config():
    """2D 8x8 run: mu = eta = 0.1, eps = 0.01, ||u0||_H1 = 0.1, T = 1, 64 steps."""
    return load_config(CONFIGS / "small_data.yaml")


@pytest.fixture(scope="session")
def small_data_ledger(small_data_config):
    cfg = small_data_config
    return estimate_constants(cfg.grid(), cfg.coeffs, rng=0)


def random_state(rng, grid, decay=1.0, lead=()):
    """Random coefficients whose size falls off like ``Λ^{-decay}``."""
    shape = tuple(lead) + (grid.n_components,) + grid.modes
    return rng.standard_normal(shape) * (grid.lambda_min / grid.eigenvalues) ** decay
