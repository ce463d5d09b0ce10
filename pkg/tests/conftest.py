# Ensure project root is on sys.path so tests can import top-level modules
import os
import sys

import numpy as np
import pytest

PROJECT_ROOT = os.path.dirname(os.path.dirname(__file__))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from utils import DataTriplet  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def linear_gaussian(rng):
    """Model-1 style sample (H0): X = Z B1 + e_x, Y = Z B2 + e_y."""
    n, b1, b2 = 200, np.array([[1.5]]), np.array([[-0.7]])
    z = rng.standard_normal((n, 1))
    x = z @ b1 + rng.standard_normal((n, 1))
    y = z @ b2 + rng.standard_normal((n, 1))
    return DataTriplet(x, y, z, truth={"B1": b1, "B2": b2})
