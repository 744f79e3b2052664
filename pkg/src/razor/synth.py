"""Labeled synthetic datasets: isotropic Gaussian clusters around random
centers, with the rows shuffled so generation order leaks nothing."""

from dataclasses import dataclass

import numpy as np

from .core import DataError, FeatureSet, STREAM_SYNTH, seeded_rng


@dataclass(frozen=True)
class SyntheticSpec:
    n_clusters: int
    points_per_cluster: int
    dims: int
    dispersion: float           # isotropic variance scale around each center
    center_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_clusters < 1 or self.points_per_cluster < 1 or self.dims < 1:
            raise DataError("n_clusters, points_per_cluster, and dims must be >= 1")
        if self.dispersion < 0:
            raise DataError("dispersion must be >= 0")


def generate(spec: SyntheticSpec) -> tuple[FeatureSet, np.ndarray]:
    """Sample the dataset and its ground-truth labels.

    Centers are standard normal times center_scale; each cluster adds
    N(0, dispersion * I) noise, so dispersion 0 reproduces the centers
    exactly. The same stream draws centers, noise, and the row permutation,
    making the dataset a pure function of the spec.
    """
    rng = seeded_rng(spec.seed, STREAM_SYNTH)
    n_c, n_s, m = spec.n_clusters, spec.points_per_cluster, spec.dims
    centers = rng.standard_normal((n_c, m)) * spec.center_scale
    sigma = np.sqrt(spec.dispersion)
    blocks = [
        centers[c] + rng.standard_normal((n_s, m)) * sigma
        for c in range(n_c)
    ]
    data = np.vstack(blocks)
    labels = np.repeat(np.arange(n_c, dtype=np.int64), n_s)
    order = rng.permutation(n_c * n_s)
    return FeatureSet(data[order]), labels[order]
