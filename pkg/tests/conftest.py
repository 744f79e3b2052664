import numpy as np
import pytest

from razor.core import FeatureSet


def blob_pair(seed: int, n_per: int = 20, m: int = 16, separation: float = 10.0,
              dispersion: float = 0.01):
    """Two isotropic Gaussian blobs with centers a fixed distance apart."""
    rng = np.random.default_rng(seed)
    c1 = rng.standard_normal(m)
    c2 = rng.standard_normal(m)
    direction = c2 - c1
    c2 = c1 + direction / np.linalg.norm(direction) * separation
    sigma = np.sqrt(dispersion)
    data = np.vstack([
        c1 + rng.standard_normal((n_per, m)) * sigma,
        c2 + rng.standard_normal((n_per, m)) * sigma,
    ])
    labels = np.repeat([0, 1], n_per)
    return data, labels


def single_blob(seed: int, n: int = 30, m: int = 16, dispersion: float = 0.01):
    rng = np.random.default_rng(seed)
    center = rng.standard_normal(m)
    return center + rng.standard_normal((n, m)) * np.sqrt(dispersion)


@pytest.fixture
def tiny_features():
    return FeatureSet(np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]]))
