"""Multinoulli naive Bayes over discretized features.

A deliberately small classifier: it reuses the same per-feature bins as
the profiling side, reports a posterior confidence for every
prediction, and measures feature importance as the mutual information
between the discretized feature and the label. That gives the studies a
performance signal and importance weights without an ML dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Hashable, Optional, Sequence

import numpy as np

from ..schema import DEFAULT_N_BINS, FeatureSchema, discretize, infer_schema
from ..tables import DataTable


@dataclass(frozen=True)
class NBModel:
    schemas: tuple[FeatureSchema, ...]
    classes: tuple[Hashable, ...]
    log_priors: tuple[float, ...]
    log_likelihood: tuple[Any, ...]  # per feature: (n_classes, n_categories) array
    importances: tuple[float, ...]
    alpha: float

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.schemas)


def _indices(table: DataTable, schema: FeatureSchema) -> np.ndarray:
    try:
        cells = table.column(schema.name)
    except KeyError:
        raise ValueError(f"table has no column {schema.name!r}") from None
    return np.array([discretize(cell, schema) for cell in cells], dtype=np.intp)


def _mutual_information(joint: np.ndarray, n: int) -> float:
    """I(feature; label) from raw joint counts, natural log."""
    p_class = joint.sum(axis=1) / n
    p_cat = joint.sum(axis=0) / n
    total = 0.0
    for k in range(joint.shape[0]):
        for v in range(joint.shape[1]):
            p = joint[k, v] / n
            if p > 0:
                total += p * math.log(p / (p_class[k] * p_cat[v]))
    return max(0.0, total)


def train_nb(
    table: DataTable,
    labels: Sequence[Hashable],
    alpha: float = 1.0,
    schemas: Optional[Sequence[FeatureSchema]] = None,
    n_bins: int = DEFAULT_N_BINS,
) -> NBModel:
    """Fit smoothed class-conditional category tables.

    alpha > 0 keeps every smoothed probability strictly positive, so
    unseen categories never zero out a posterior.
    """
    if alpha <= 0:
        raise ValueError("smoothing alpha must be positive")
    if len(labels) != len(table.rows):
        raise ValueError(f"{len(labels)} labels for {len(table.rows)} rows")
    classes = tuple(sorted(set(labels), key=repr))
    if len(classes) < 2:
        raise ValueError(f"need at least two classes, got {len(classes)}")
    if schemas is None:
        schemas = infer_schema(table, n_bins=n_bins)
    n = len(table.rows)
    class_index = {c: k for k, c in enumerate(classes)}
    y = np.array([class_index[label] for label in labels], dtype=np.intp)
    class_counts = np.bincount(y, minlength=len(classes))

    log_lik = []
    importances = []
    for schema in schemas:
        idx = _indices(table, schema)
        c = schema.category_count
        joint = np.zeros((len(classes), c))
        np.add.at(joint, (y, idx), 1.0)
        smoothed = (joint + alpha) / (class_counts[:, None] + alpha * c)
        log_lik.append(np.log(smoothed))
        importances.append(_mutual_information(joint, n))

    total = sum(importances)
    if total > 0:
        norm = tuple(v / total for v in importances)
    else:
        norm = tuple(1.0 / len(schemas) for _ in schemas)
    return NBModel(
        schemas=tuple(schemas),
        classes=classes,
        log_priors=tuple(math.log(k / n) for k in class_counts),
        log_likelihood=tuple(log_lik),
        importances=norm,
        alpha=alpha,
    )


def predict(model: NBModel, table: DataTable) -> tuple[list[Hashable], float]:
    """Argmax-posterior labels plus the mean winning posterior."""
    if not table.rows:
        raise ValueError("cannot predict on an empty table")
    n = len(table.rows)
    log_post = np.tile(np.array(model.log_priors), (n, 1))
    for schema, lik in zip(model.schemas, model.log_likelihood):
        idx = _indices(table, schema)
        log_post += lik[:, idx].T
    log_post -= log_post.max(axis=1, keepdims=True)
    post = np.exp(log_post)
    post /= post.sum(axis=1, keepdims=True)
    winners = post.argmax(axis=1)
    confidence = float(post[np.arange(n), winners].mean())
    return [model.classes[k] for k in winners], confidence
