"""Domain types, configuration, and deterministic seeding shared by the pipeline."""

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class RazorError(Exception):
    """Base class for package errors."""


class ConfigError(RazorError):
    """A configuration value is out of bounds."""


class DataError(RazorError):
    """Input data violates a structural invariant."""


@dataclass(frozen=True)
class FeatureSet:
    """n feature vectors of dimension m, addressed by dense row index.

    External string ids are metadata only; all math runs on row indices.
    """

    data: np.ndarray
    external_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError("empty matrix")
        if not np.all(np.isfinite(arr)):
            r, c = np.argwhere(~np.isfinite(arr))[0]
            raise DataError(f"non-finite value at ({r},{c})")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        if self.external_ids is not None:
            ids = tuple(self.external_ids)
            if len(ids) != arr.shape[0]:
                raise DataError("external ids not aligned with rows")
            if len(set(ids)) != len(ids):
                raise DataError("external ids not unique")
            object.__setattr__(self, "external_ids", ids)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]


CENTROID_RTOL = 1e-9


@dataclass(frozen=True)
class Cluster:
    """A sorted set of instance indices plus the mean of their rows."""

    members: tuple[int, ...]
    centroid: np.ndarray

    def __post_init__(self):
        if len(self.members) == 0:
            raise DataError("cluster has no members")
        mem = tuple(int(v) for v in self.members)
        if any(b <= a for a, b in zip(mem, mem[1:])):
            raise DataError("cluster members must be strictly increasing")
        object.__setattr__(self, "members", mem)
        cen = np.asarray(self.centroid, dtype=np.float64)
        cen.setflags(write=False)
        object.__setattr__(self, "centroid", cen)

    @property
    def size(self) -> int:
        return len(self.members)


def make_cluster(members, data: np.ndarray) -> Cluster:
    """Build a Cluster with its centroid computed from ``data`` rows."""
    mem = sorted(int(v) for v in members)
    return Cluster(tuple(mem), data[mem].mean(axis=0))


@dataclass(frozen=True)
class Clustering:
    """An ordered partition of instance indices 0..source_n-1."""

    clusters: tuple[Cluster, ...]
    source_n: int

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        seen = sorted(v for c in self.clusters for v in c.members)
        if seen != list(range(self.source_n)):
            raise DataError("clusters do not partition 0..n-1")

    def __len__(self) -> int:
        return len(self.clusters)

    def member_lists(self) -> list[list[int]]:
        return [list(c.members) for c in self.clusters]

    def labels(self) -> np.ndarray:
        """Dense cluster-id label per instance."""
        lab = np.empty(self.source_n, dtype=np.int64)
        for k, c in enumerate(self.clusters):
            lab[list(c.members)] = k
        return lab

    def centroid_matrix(self) -> np.ndarray:
        return np.stack([c.centroid for c in self.clusters])


def clustering_from_members(member_lists, data: np.ndarray) -> Clustering:
    return Clustering(
        tuple(make_cluster(m, data) for m in member_lists),
        source_n=data.shape[0],
    )


@dataclass(frozen=True)
class SelectionResult:
    """Per-cluster ranked picks and their disjoint global union."""

    per_cluster: tuple  # of ClusterSelection (see selection module)
    global_indices: tuple[int, ...]


@dataclass
class RazorConfig:
    """All pipeline parameters.

    Defaults follow the reference operating point: initial k-means k of 1000
    implied by a 100000-point partition cap over 100-point entropy inputs,
    at most 10 split/merge iterations with a 0.05 convergence threshold,
    3-D projection with a 0.9 volume-ratio threshold for final aggregation,
    and an 8-D projection for sample selection.
    """

    n_kmeans_cap: int = 100000
    n_entcls: int = 100
    max_iter: int = 10
    epsilon: float = 0.05
    pca_agg_dims: int = 3
    th_phi: float = 0.9
    pca_sel_dims: int = 8
    tau: float = 0.10
    seed: int = 0
    workers: int = 1
    k_init: int | None = None

    def __post_init__(self):
        if self.k_init is None:
            self.k_init = max(1, self.n_kmeans_cap // max(1, self.n_entcls))


def validate_config(cfg: RazorConfig) -> RazorConfig:
    """Return cfg unchanged if every bound holds; report the first violation."""
    checks = [
        ("n_kmeans_cap", cfg.n_kmeans_cap >= 1, "must be >= 1"),
        ("n_entcls", cfg.n_entcls >= 2, "must be >= 2"),
        ("max_iter", cfg.max_iter >= 1, "must be >= 1"),
        ("epsilon", 0.0 < cfg.epsilon < 1.0, "out of range (0, 1)"),
        ("pca_agg_dims", 1 <= cfg.pca_agg_dims <= 3, "must be in 1..3"),
        ("th_phi", cfg.th_phi > 0.0, "must be > 0"),
        ("pca_sel_dims", cfg.pca_sel_dims >= 1, "must be >= 1"),
        ("tau", 0.0 < cfg.tau <= 1.0, "out of range (0, 1]"),
        ("workers", cfg.workers >= 1, "must be >= 1"),
        ("k_init", cfg.k_init is None or cfg.k_init >= 1, "must be >= 1"),
    ]
    for name, ok, msg in checks:
        if not ok:
            raise ConfigError(f"{name} {msg}")
    return cfg


# Stream tags keep independent random streams per purpose, so results cannot
# depend on worker count or call interleaving.
STREAM_PARTITION = 1
STREAM_KMEANS = 2
STREAM_SYNTH = 3
STREAM_BENCH = 4


def seeded_rng(seed: int, stream_tag: int = 0) -> np.random.Generator:
    """Deterministic, platform-independent random stream for (seed, tag)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream_tag,)))


def derive_seed(seed: int, *tags: int) -> int:
    """A child integer seed that is a pure function of (seed, tags)."""
    return int(np.random.SeedSequence(seed, spawn_key=tuple(tags)).generate_state(1)[0])


_CONFIG_FIELDS = {
    "n_kmeans_cap": int,
    "n_entcls": int,
    "max_iter": int,
    "epsilon": float,
    "pca_agg_dims": int,
    "th_phi": float,
    "pca_sel_dims": int,
    "tau": float,
    "seed": int,
    "workers": int,
    "k_init": int,
}


def load_config_file(path, base: RazorConfig | None = None) -> RazorConfig:
    """Read a flat ``key = value`` file into a RazorConfig.

    Lines starting with ``#`` and blank lines are ignored. Unknown keys are
    rejected so typos cannot silently fall back to defaults.
    """
    cfg = base if base is not None else RazorConfig()
    updates = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        try:
            updates[key] = _CONFIG_FIELDS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for '{key}': {value}") from exc
    return validate_config(replace(cfg, **updates))
