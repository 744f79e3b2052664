"""Instance selection for large feature-vector datasets: entropy-driven
split-and-merge clustering followed by convex-hull representative picking."""

__version__ = "0.1.0"

from .core import (
    Cluster,
    Clustering,
    ConfigError,
    DataError,
    FeatureSet,
    RazorConfig,
    SelectionResult,
    seeded_rng,
    validate_config,
)
from .pipeline import IterationTrace, razor_cluster
from .selection import select
from .synth import SyntheticSpec, generate
from .metrics import ami, balance_report, segmentation_scores

__all__ = [
    "Cluster",
    "Clustering",
    "ConfigError",
    "DataError",
    "FeatureSet",
    "IterationTrace",
    "RazorConfig",
    "SelectionResult",
    "SyntheticSpec",
    "ami",
    "balance_report",
    "generate",
    "razor_cluster",
    "seeded_rng",
    "segmentation_scores",
    "select",
    "validate_config",
    "__version__",
]
