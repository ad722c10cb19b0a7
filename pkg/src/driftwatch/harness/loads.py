"""Synthetic traffic generators with three marginal shapes.

Feature means follow the sample index: row i of n gets phase
t = (i + 0.5) / n, and the load kind maps that phase to a mean before
unit Gaussian noise is added.

- periodic: means ride one full sinusoid cycle, piling mass near both
  extremes with a valley in the middle;
- flash:    a quiet baseline at 0 with a short high-amplitude burst
  window;
- linear:   means drift linearly from 0 out to one extreme, covering
  half the range evenly.

Because the phase sweep is the same at any n, a batch of any size
follows the same per-feature marginal as its training table, while the
three kinds put their mass in visibly different places.

Labels come from one fixed rule, a noisy linear threshold whose weights
depend only on label_seed, so differently-shaped loads can share a
ground truth.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from ..tables import Cell, DataTable

LOAD_KINDS = ("periodic", "flash", "linear")

SHAPE_AMPLITUDE = 3.0
NOISE_SIGMA = 0.5  # keeps the kind shapes visible after binning
FLASH_WINDOW = 0.15  # fraction of rows inside the burst
LABEL_FREQUENCY = 1.2  # radians per feature unit in the label rule
MARGIN_STD = 0.7  # std of sin(.) terms, scales the label noise


def derive_seed(base: int, *parts: object) -> int:
    """Stable independent stream per (base, parts) combination."""
    text = repr((base,) + parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "big")


@dataclass(frozen=True)
class LoadSpec:
    kind: str
    n_samples: int
    n_features: int = 3
    seed: int = 0
    label_seed: int = 0
    label_noise: float = 0.25

    def __post_init__(self) -> None:
        if self.kind not in LOAD_KINDS:
            raise ValueError(f"unknown load kind {self.kind!r}; expected one of {LOAD_KINDS}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.n_features < 1:
            raise ValueError("n_features must be positive")
        if self.label_noise < 0:
            raise ValueError("label_noise must be non-negative")


def _feature_means(kind: str, t: np.ndarray, j: int, n_features: int) -> np.ndarray:
    a = SHAPE_AMPLITUDE
    if kind == "periodic":
        phase = 2.0 * math.pi * j / n_features
        return a * np.sin(2.0 * math.pi * t + phase)
    if kind == "flash":
        return np.where(t < FLASH_WINDOW, a, 0.0)
    # linear: drift from 0 toward one extreme, alternating per feature
    sign = 1.0 if j % 2 == 0 else -1.0
    return sign * a * t


def gen_load(spec: LoadSpec) -> tuple[DataTable, list[int]]:
    """Generate one table plus binary labels; pure function of the spec."""
    rng = np.random.default_rng(
        derive_seed(spec.seed, "load", spec.kind, spec.n_samples, spec.n_features)
    )
    t = (np.arange(spec.n_samples) + 0.5) / spec.n_samples
    x = np.empty((spec.n_samples, spec.n_features))
    for j in range(spec.n_features):
        means = _feature_means(spec.kind, t, j, spec.n_features)
        x[:, j] = means + NOISE_SIGMA * rng.standard_normal(spec.n_samples)

    label_rng = np.random.default_rng(derive_seed(spec.label_seed, "label-rule", spec.n_features))
    weights = label_rng.standard_normal(spec.n_features)
    phases = label_rng.uniform(0.0, 2.0 * math.pi, spec.n_features)
    # Locally learnable, globally wiggly: a model only trained on part
    # of the range cannot extrapolate this rule to unseen regions.
    margin = np.sin(LABEL_FREQUENCY * x + phases) @ weights
    noise_scale = spec.label_noise * MARGIN_STD * float(np.linalg.norm(weights))
    margin = margin + noise_scale * rng.standard_normal(spec.n_samples)
    labels = (margin > 0).astype(int).tolist()

    columns = {f"f{j}": x[:, j].tolist() for j in range(spec.n_features)}
    return DataTable.from_columns(columns), labels


def inject_noise(table: DataTable, level: float, seed: int = 0) -> DataTable:
    """Perturb numeric cells by level * column-sigma * N(0,1).

    Level 0 returns the table untouched. Columns holding any label cell
    and columns with zero variance come through unchanged, as do
    missing cells.
    """
    if not 0.0 <= level < 1.0:
        raise ValueError(f"noise level must be in [0, 1), got {level}")
    if level == 0.0:
        return table
    rng = np.random.default_rng(derive_seed(seed, "noise", level))
    named: dict[str, list[Cell]] = {}
    for name in table.columns:
        cells = table.column(name)
        draws = rng.standard_normal(len(cells))
        numeric = [c for c in cells if isinstance(c, float)]
        if any(isinstance(c, str) for c in cells) or not numeric:
            named[name] = cells
            continue
        sigma = float(np.std(numeric))
        if sigma == 0.0:
            named[name] = cells
            continue
        named[name] = [
            c + level * sigma * g if isinstance(c, float) else c
            for c, g in zip(cells, draws)
        ]
    return DataTable.from_columns(named)
