"""Label-free model health monitoring.

Profile training data into per-feature histograms, score inference
batches against the profile with a coverage-aware similarity metric
plus standard divergences, and alert when a threshold is crossed.
"""

from .metrics import (
    HealthScore,
    kl_divergence,
    rmse,
    score_batch,
    similarity,
    wasserstein1d,
)
from .monitor import AlertPolicy, AlertRecord, HealthReport, ScoreHistory, auto_threshold, evaluate_batch
from .profile import (
    InferenceBatchStats,
    TrainingProfile,
    batch_frequencies,
    build_profile,
    load_profile,
    save_profile,
)
from .schema import BinSpec, FeatureSchema, compute_bins, discretize, infer_schema
from .tables import DataTable, read_csv, write_csv

__version__ = "0.1.0"

__all__ = [
    "AlertPolicy",
    "AlertRecord",
    "BinSpec",
    "DataTable",
    "FeatureSchema",
    "HealthReport",
    "HealthScore",
    "InferenceBatchStats",
    "ScoreHistory",
    "TrainingProfile",
    "auto_threshold",
    "batch_frequencies",
    "build_profile",
    "compute_bins",
    "discretize",
    "evaluate_batch",
    "infer_schema",
    "kl_divergence",
    "load_profile",
    "read_csv",
    "rmse",
    "save_profile",
    "score_batch",
    "similarity",
    "wasserstein1d",
    "write_csv",
    "__version__",
]
