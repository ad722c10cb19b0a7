"""Synthetic studies: load generation, a small classifier, sweeps."""

from .loads import LOAD_KINDS, LoadSpec, derive_seed, gen_load, inject_noise
from .nb import NBModel, predict, train_nb
from .stats import accuracy, pearson, r2, spearman
from .studies import (
    StudyReport,
    StudyRow,
    histogram_overlay,
    run_load_shift_study,
    run_noise_study,
    run_sample_size_study,
)

__all__ = [
    "LOAD_KINDS",
    "LoadSpec",
    "derive_seed",
    "gen_load",
    "inject_noise",
    "NBModel",
    "train_nb",
    "predict",
    "accuracy",
    "r2",
    "pearson",
    "spearman",
    "StudyReport",
    "StudyRow",
    "histogram_overlay",
    "run_sample_size_study",
    "run_noise_study",
    "run_load_shift_study",
]
