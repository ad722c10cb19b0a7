"""Study drivers producing metric-vs-performance tables.

Each study trains a profile plus classifier on one synthetic load, then
scores batches under varied conditions (batch size, noise level, or a
different load kind). Rows carry the aggregate drift metrics alongside
accuracy and confidence; a final row correlates each metric column with
accuracy across the conditions. Everything is a pure function of the
seeds, so reports are byte-identical across runs.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional, Sequence

from ..metrics import score_batch
from ..profile import TrainingProfile, InferenceBatchStats, batch_frequencies, build_profile
from ..schema import DEFAULT_N_BINS, infer_schema
from ..serialize import to_jsonable
from ..tables import DataTable, write_csv
from .loads import LOAD_KINDS, LoadSpec, derive_seed, gen_load, inject_noise
from .nb import NBModel, predict, train_nb
from .stats import accuracy, pearson

# Fixed column order: divergences first, similarity, confidence, then the
# performance column.
METRIC_COLUMNS = ("rmse", "kl", "wasserstein", "similarity", "confidence")
PERFORMANCE_COLUMN = "accuracy"

DEFAULT_SIZES = (10, 20, 50, 100, 200, 500, 1000, 2000)
DEFAULT_LEVELS = tuple(i / 10 for i in range(10))


@dataclass(frozen=True)
class StudyRow:
    condition: str
    order: float
    values: dict[str, float]


@dataclass(frozen=True)
class StudyReport:
    kind: str
    condition_label: str
    rows: tuple[StudyRow, ...]
    correlations: dict[str, Optional[float]]

    def column(self, name: str) -> list[float]:
        return [row.values[name] for row in self.rows]

    def to_json(self) -> dict[str, Any]:
        return to_jsonable(
            {
                "kind": self.kind,
                "condition_label": self.condition_label,
                "rows": [
                    {"condition": r.condition, **r.values} for r in self.rows
                ],
                "correlations": {
                    k: ("-" if v is None else v) for k, v in self.correlations.items()
                },
            }
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = [self.condition_label, *METRIC_COLUMNS, PERFORMANCE_COLUMN]
        writer.writerow(header)
        for row in self.rows:
            writer.writerow(
                [row.condition]
                + [_cell(row.values[c]) for c in METRIC_COLUMNS]
                + [_cell(row.values[PERFORMANCE_COLUMN])]
            )
        writer.writerow(
            ["correlation"]
            + [_cell(self.correlations[c]) for c in METRIC_COLUMNS]
            + [""]
        )
        return buf.getvalue()

    def to_text(self) -> str:
        header = [self.condition_label, *METRIC_COLUMNS, PERFORMANCE_COLUMN]
        body = [
            [row.condition]
            + [_fmt(row.values[c]) for c in METRIC_COLUMNS]
            + [_fmt(row.values[PERFORMANCE_COLUMN])]
            for row in self.rows
        ]
        corr = (
            ["correlation"]
            + [_fmt(self.correlations[c]) for c in METRIC_COLUMNS]
            + [""]
        )
        table = [header, *body, corr]
        widths = [max(len(line[i]) for line in table) for i in range(len(header))]
        rule = "-+-".join("-" * w for w in widths)
        lines = [" | ".join(cell.ljust(w) for cell, w in zip(line, widths)) for line in table]
        lines.insert(1, rule)
        lines.insert(-1, rule)
        return "\n".join(lines) + "\n"


def _cell(value: Optional[float]) -> str:
    if value is None:
        return "-"
    if math.isinf(value):
        return "inf"
    return repr(value)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "-"
    if math.isinf(value):
        return "inf"
    return f"{value:.4f}"


def _train_reference(
    spec: LoadSpec, n_bins: int, alpha: float
) -> tuple[TrainingProfile, NBModel]:
    table, labels = gen_load(spec)
    schemas = infer_schema(table, n_bins=n_bins)
    nb = train_nb(table, labels, alpha=alpha, schemas=schemas)
    profile = build_profile(
        table, schemas, model_id=f"synthetic-{spec.kind}", importances=nb.importances
    )
    return profile, nb


def _measure(
    profile: TrainingProfile,
    nb: NBModel,
    table: DataTable,
    labels: Sequence[Any],
) -> dict[str, float]:
    batch = batch_frequencies(table, profile)
    score = score_batch(profile, batch)
    pred, confidence = predict(nb, table)
    values = {name: score.aggregate[name] for name in ("rmse", "kl", "wasserstein", "similarity")}
    values["confidence"] = confidence
    values[PERFORMANCE_COLUMN] = accuracy(pred, labels)
    return values


def _mean(dicts: Sequence[dict[str, float]]) -> dict[str, float]:
    keys = dicts[0].keys()
    return {k: math.fsum(d[k] for d in dicts) / len(dicts) for k in keys}


def _correlate(rows: Sequence[StudyRow]) -> dict[str, Optional[float]]:
    perf = [r.values[PERFORMANCE_COLUMN] for r in rows]
    return {
        col: pearson([r.values[col] for r in rows], perf) for col in METRIC_COLUMNS
    }


def run_sample_size_study(
    spec: LoadSpec,
    sizes: Sequence[int] = DEFAULT_SIZES,
    seeds: Sequence[int] = range(5),
    n_bins: int = DEFAULT_N_BINS,
    alpha: float = 1.0,
) -> StudyReport:
    """i.i.d. batches of varying size drawn from the training load."""
    if not sizes or min(sizes) < 1:
        raise ValueError("batch sizes must be positive")
    profile, nb = _train_reference(spec, n_bins, alpha)
    rows = []
    for size in sorted(sizes):
        measured = []
        for s in seeds:
            bspec = replace(spec, n_samples=size, seed=derive_seed(spec.seed, "batch", size, s))
            table, labels = gen_load(bspec)
            measured.append(_measure(profile, nb, table, labels))
        rows.append(StudyRow(condition=str(size), order=float(size), values=_mean(measured)))
    rows.sort(key=lambda r: r.order)
    return StudyReport(
        kind="sample-size",
        condition_label="batch_size",
        rows=tuple(rows),
        correlations=_correlate(rows),
    )


def run_noise_study(
    spec: LoadSpec,
    levels: Sequence[float] = DEFAULT_LEVELS,
    seeds: Sequence[int] = range(3),
    batch_size: int = 1000,
    n_bins: int = DEFAULT_N_BINS,
    alpha: float = 1.0,
) -> StudyReport:
    """Fixed-size batches with rising feature noise.

    Labels stay attached to the clean feature values, so accuracy
    measures how much the added noise breaks the learned rule.
    """
    profile, nb = _train_reference(spec, n_bins, alpha)
    clean = []
    for s in seeds:
        bspec = replace(
            spec, n_samples=batch_size, seed=derive_seed(spec.seed, "noise-batch", s)
        )
        clean.append(gen_load(bspec))
    rows = []
    for level in sorted(levels):
        measured = []
        for s, (table, labels) in zip(seeds, clean):
            noisy = inject_noise(table, level, seed=derive_seed(spec.seed, "noise", s, level))
            measured.append(_measure(profile, nb, noisy, labels))
        rows.append(StudyRow(condition=f"{level:.1f}", order=level, values=_mean(measured)))
    rows.sort(key=lambda r: r.order)
    return StudyReport(
        kind="noise",
        condition_label="noise_level",
        rows=tuple(rows),
        correlations=_correlate(rows),
    )


def run_load_shift_study(
    kinds: Sequence[str] = LOAD_KINDS,
    train_samples: int = 2000,
    batch_size: int = 1000,
    n_features: int = 3,
    base_seed: int = 0,
    label_seed: int = 7,
    seeds: Sequence[int] = range(3),
    n_bins: int = DEFAULT_N_BINS,
    alpha: float = 1.0,
) -> StudyReport:
    """Every training kind scored against batches of every kind.

    All cells share one label rule (label_seed), so accuracy changes
    reflect the input shift, not a moving target.
    """
    for kind in kinds:
        if kind not in LOAD_KINDS:
            raise ValueError(f"unknown load kind {kind!r}")
    rows = []
    for i, train_kind in enumerate(sorted(kinds)):
        spec = LoadSpec(
            kind=train_kind,
            n_samples=train_samples,
            n_features=n_features,
            seed=derive_seed(base_seed, "train", train_kind),
            label_seed=label_seed,
        )
        profile, nb = _train_reference(spec, n_bins, alpha)
        for j, test_kind in enumerate(sorted(kinds)):
            measured = []
            for s in seeds:
                bspec = LoadSpec(
                    kind=test_kind,
                    n_samples=batch_size,
                    n_features=n_features,
                    seed=derive_seed(base_seed, "test", train_kind, test_kind, s),
                    label_seed=label_seed,
                )
                table, labels = gen_load(bspec)
                measured.append(_measure(profile, nb, table, labels))
            rows.append(
                StudyRow(
                    condition=f"{train_kind}->{test_kind}",
                    order=float(i * len(kinds) + j),
                    values=_mean(measured),
                )
            )
    return StudyReport(
        kind="load-shift",
        condition_label="train->test",
        rows=tuple(rows),
        correlations=_correlate(rows),
    )


def histogram_overlay(profile: TrainingProfile, batch: InferenceBatchStats) -> DataTable:
    """Per-bin train vs batch frequencies, plot-ready."""
    rows = []
    for feat in profile.features:
        labels = feat.schema.bin_labels()
        infer = batch.freq_for(feat.schema.name)
        for idx, (label, t, b) in enumerate(zip(labels, feat.freq, infer)):
            rows.append(
                (
                    feat.schema.name,
                    float(idx),
                    label,
                    float(t),
                    t / profile.n_train,
                    float(b),
                    b / batch.n_infer,
                )
            )
    return DataTable.from_rows(
        (
            "feature",
            "index",
            "label",
            "train_freq",
            "train_frac",
            "infer_freq",
            "infer_frac",
        ),
        rows,
    )


def write_overlay_csv(profile: TrainingProfile, batch: InferenceBatchStats, path: str | Path) -> None:
    write_csv(histogram_overlay(profile, batch), path)
