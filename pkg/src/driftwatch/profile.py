"""Training profiles and per-batch frequency statistics.

A TrainingProfile is the persisted reference artifact: for every
feature it holds the schema, the training count vector, and a feature
importance weight. Batches are reduced to count vectors against the
profile's fixed schemas; training-time bins and vocabularies are reused
verbatim, never re-derived from inference data.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

from .schema import CATEGORICAL, CONTINUOUS, BinSpec, FeatureSchema, discretize
from .serialize import pretty_json
from .tables import DataTable

PROFILE_FORMAT_VERSION = 1


def now_ms() -> int:
    return int(time.time() * 1000)


@dataclass(frozen=True)
class FeatureProfile:
    """One feature's training reference: schema, counts, importance."""

    schema: FeatureSchema
    freq: tuple[int, ...]
    importance: float

    def __post_init__(self) -> None:
        if len(self.freq) != self.schema.category_count:
            raise ValueError(
                f"{self.schema.name}: freq length {len(self.freq)} != "
                f"category count {self.schema.category_count}"
            )
        if any(f < 0 for f in self.freq):
            raise ValueError(f"{self.schema.name}: negative frequency")
        if not 0.0 <= self.importance <= 1.0:
            raise ValueError(f"{self.schema.name}: importance must be in [0, 1]")

    @property
    def name(self) -> str:
        return self.schema.name


@dataclass(frozen=True)
class TrainingProfile:
    model_id: str
    features: tuple[FeatureProfile, ...]
    n_train: int
    created_at: int = 0  # epoch ms; not part of the file format

    def __post_init__(self) -> None:
        if self.n_train <= 0:
            raise ValueError("n_train must be positive")
        if not self.features:
            raise ValueError("profile must have at least one feature")
        for feat in self.features:
            if sum(feat.freq) != self.n_train:
                raise ValueError(
                    f"{feat.name}: counts sum to {sum(feat.freq)}, expected {self.n_train}"
                )
        total = sum(f.importance for f in self.features)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"importances must sum to 1, got {total}")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def feature(self, name: str) -> FeatureProfile:
        for feat in self.features:
            if feat.name == name:
                return feat
        raise KeyError(f"no such feature: {name!r}")


@dataclass(frozen=True)
class InferenceBatchStats:
    """Count vectors for one scored batch, aligned to a profile."""

    model_id: str
    batch_id: str
    freqs: tuple[tuple[str, tuple[int, ...]], ...]  # (feature name, counts)
    n_infer: int
    timestamp: int = 0

    def __post_init__(self) -> None:
        if self.n_infer <= 0:
            raise ValueError("n_infer must be positive")
        for name, counts in self.freqs:
            if sum(counts) != self.n_infer:
                raise ValueError(f"{name}: counts sum to {sum(counts)}, expected {self.n_infer}")
            if any(c < 0 for c in counts):
                raise ValueError(f"{name}: negative frequency")

    def freq_for(self, name: str) -> tuple[int, ...]:
        for fname, counts in self.freqs:
            if fname == name:
                return counts
        raise KeyError(f"no such feature: {name!r}")


def normalize_importances(values: Sequence[float], n: int) -> tuple[float, ...]:
    """Scale raw importance weights to sum to 1; uniform when absent."""
    if not values:
        return tuple(1.0 / n for _ in range(n))
    if len(values) != n:
        raise ValueError(f"expected {n} importances, got {len(values)}")
    if any(v < 0 for v in values):
        raise ValueError("importances must be non-negative")
    total = float(sum(values))
    if total <= 0:
        raise ValueError("importances must not all be zero")
    return tuple(float(v) / total for v in values)


def count_feature(table: DataTable, schema: FeatureSchema) -> tuple[int, ...]:
    """Histogram one column through the schema's discretizer."""
    counts = [0] * schema.category_count
    for cell in table.column(schema.name):
        counts[discretize(cell, schema)] += 1
    return tuple(counts)


def build_profile(
    table: DataTable,
    schemas: Sequence[FeatureSchema],
    model_id: str,
    importances: Optional[Sequence[float]] = None,
    created_at: Optional[int] = None,
) -> TrainingProfile:
    """Count the training table into a profile. Schemas must cover all columns."""
    if not model_id:
        raise ValueError("model_id must be non-empty")
    if table.n_rows == 0:
        raise ValueError("cannot profile an empty table")
    schema_names = [s.name for s in schemas]
    if sorted(schema_names) != sorted(table.columns):
        raise ValueError(
            f"schemas cover {sorted(schema_names)} but table has {sorted(table.columns)}"
        )
    weights = normalize_importances(list(importances or []), len(schemas))
    features = tuple(
        FeatureProfile(schema=s, freq=count_feature(table, s), importance=w)
        for s, w in zip(schemas, weights)
    )
    return TrainingProfile(
        model_id=model_id,
        features=features,
        n_train=table.n_rows,
        created_at=now_ms() if created_at is None else created_at,
    )


def batch_frequencies(
    table: DataTable,
    profile: TrainingProfile,
    batch_id: str = "",
    timestamp: int = 0,
) -> InferenceBatchStats:
    """Count a batch against the profile's fixed schemas.

    Columns are matched by name; every profile feature must be present.
    Extra batch columns are ignored.
    """
    if table.n_rows == 0:
        raise ValueError("cannot score an empty batch")
    missing = [n for n in profile.feature_names if n not in table.columns]
    if missing:
        raise ValueError(f"batch is missing column(s): {missing}")
    freqs = tuple((f.name, count_feature(table, f.schema)) for f in profile.features)
    return InferenceBatchStats(
        model_id=profile.model_id,
        batch_id=batch_id,
        freqs=freqs,
        n_infer=table.n_rows,
        timestamp=timestamp,
    )


# ---------------------------------------------------------------------------
# File / wire formats


def profile_to_doc(profile: TrainingProfile) -> dict[str, Any]:
    features = []
    for feat in profile.features:
        entry: dict[str, Any] = {
            "name": feat.name,
            "kind": feat.schema.kind,
            "freq": list(feat.freq),
            "importance": feat.importance,
        }
        if feat.schema.kind == CATEGORICAL:
            entry["categories"] = list(feat.schema.categories or ())
        else:
            entry["edges"] = list(feat.schema.bins.edges)  # type: ignore[union-attr]
        features.append(entry)
    return {
        "version": PROFILE_FORMAT_VERSION,
        "model_id": profile.model_id,
        "n_train": profile.n_train,
        "features": features,
    }


def profile_from_doc(doc: dict[str, Any]) -> TrainingProfile:
    if doc.get("version") != PROFILE_FORMAT_VERSION:
        raise ValueError(f"unsupported profile version: {doc.get('version')!r}")
    features = []
    for entry in doc["features"]:
        kind = entry["kind"]
        if kind == CATEGORICAL:
            schema = FeatureSchema(entry["name"], CATEGORICAL, categories=tuple(entry["categories"]))
        elif kind == CONTINUOUS:
            schema = FeatureSchema(
                entry["name"], CONTINUOUS, bins=BinSpec(tuple(float(e) for e in entry["edges"]))
            )
        else:
            raise ValueError(f"{entry.get('name')}: unknown feature kind {kind!r}")
        features.append(
            FeatureProfile(
                schema=schema,
                freq=tuple(int(f) for f in entry["freq"]),
                importance=float(entry["importance"]),
            )
        )
    return TrainingProfile(
        model_id=doc["model_id"], features=tuple(features), n_train=int(doc["n_train"])
    )


def save_profile(profile: TrainingProfile, path: str | Path) -> None:
    Path(path).write_text(pretty_json(profile_to_doc(profile)), encoding="utf-8")


def load_profile(path: str | Path) -> TrainingProfile:
    with open(path, encoding="utf-8") as fh:
        return profile_from_doc(json.load(fh))


def batch_to_doc(batch: InferenceBatchStats) -> dict[str, Any]:
    return {
        "model_id": batch.model_id,
        "batch_id": batch.batch_id,
        "n_infer": batch.n_infer,
        "timestamp": batch.timestamp,
        "features": [{"name": name, "freq": list(counts)} for name, counts in batch.freqs],
    }


def batch_from_doc(doc: dict[str, Any]) -> InferenceBatchStats:
    return InferenceBatchStats(
        model_id=doc["model_id"],
        batch_id=str(doc.get("batch_id", "")),
        freqs=tuple(
            (entry["name"], tuple(int(c) for c in entry["freq"])) for entry in doc["features"]
        ),
        n_infer=int(doc["n_infer"]),
        timestamp=int(doc.get("timestamp", 0)),
    )
