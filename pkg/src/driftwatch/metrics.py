"""Distribution-health metrics computed per feature and aggregated.

The similarity score is the normalized mean training-probability of a
batch. With training counts t and batch counts b over the same bins:

    raw = (n_train / n_infer) * sum(t_i * b_i) / sum(t_j ** 2)

It reads "how familiar is this batch, relative to how familiar the
training data is to itself": 1.0 means the batch lands on bins exactly
as often as training did, values above 1 mean the batch concentrates
on the *best*-trained bins (not a problem, so the reported score is
clipped to 1), and low values mean mass on poorly-trained bins.

The classical baselines (KL divergence, RMSE, 1-D Wasserstein) are
computed on the normalized histograms. KL is deliberately unsmoothed:
an empty batch bin under positive training mass yields +infinity,
which is a real, reportable failure mode at small batch sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from .profile import FeatureProfile, InferenceBatchStats, TrainingProfile

METRIC_NAMES = ("similarity", "kl", "rmse", "wasserstein")

DEFAULT_TOP_K = 5


def _checked_counts(
    train_freq: Sequence[int],
    infer_freq: Sequence[int],
    n_train: Optional[int],
    n_infer: Optional[int],
) -> tuple[int, int]:
    if len(train_freq) != len(infer_freq):
        raise ValueError(
            f"count vectors differ in length: {len(train_freq)} vs {len(infer_freq)}"
        )
    if any(t < 0 for t in train_freq) or any(b < 0 for b in infer_freq):
        raise ValueError("counts must be non-negative")
    t_sum, i_sum = sum(train_freq), sum(infer_freq)
    if n_train is None:
        n_train = t_sum
    elif n_train != t_sum:
        raise ValueError(f"n_train={n_train} but training counts sum to {t_sum}")
    if n_infer is None:
        n_infer = i_sum
    elif n_infer != i_sum:
        raise ValueError(f"n_infer={n_infer} but batch counts sum to {i_sum}")
    if n_train <= 0:
        raise ValueError("training counts are all zero: profile feature never observed")
    if n_infer <= 0:
        raise ValueError("batch counts are all zero")
    return n_train, n_infer


def similarity(
    train_freq: Sequence[int],
    infer_freq: Sequence[int],
    n_train: Optional[int] = None,
    n_infer: Optional[int] = None,
) -> tuple[float, float]:
    """Similarity of a batch to the training distribution.

    Returns (raw, clipped). Kept in exact integer arithmetic up to the
    final division, so a batch exactly proportional to training scores
    raw == 1.0 with no rounding residue.
    """
    n_train, n_infer = _checked_counts(train_freq, infer_freq, n_train, n_infer)
    dot = 0
    self_dot = 0
    for t, b in zip(train_freq, infer_freq):
        dot += t * b
        self_dot += t * t
    raw = (n_train * dot) / (n_infer * self_dot)
    return raw, min(1.0, raw)


def similarity_naive(
    train_freq: Sequence[int],
    n_train: int,
    batch_samples: Sequence[int],
) -> float:
    """Sample-by-sample form of the similarity score (the slow oracle).

    Averages the training probability of each sample's bin, then divides
    by the training data's mean self-probability. Must agree with
    similarity() up to floating-point rounding.
    """
    if sum(train_freq) != n_train:
        raise ValueError(f"n_train={n_train} but training counts sum to {sum(train_freq)}")
    if n_train <= 0:
        raise ValueError("training counts are all zero: profile feature never observed")
    if not batch_samples:
        raise ValueError("batch is empty")
    for idx in batch_samples:
        if not 0 <= idx < len(train_freq):
            raise ValueError(f"sample index {idx} out of range")
    mean_p = sum(train_freq[idx] / n_train for idx in batch_samples) / len(batch_samples)
    self_p = sum(t * t for t in train_freq) / (n_train * n_train)
    return mean_p / self_p


def kl_divergence(
    train_freq: Sequence[int],
    infer_freq: Sequence[int],
    n_train: Optional[int] = None,
    n_infer: Optional[int] = None,
) -> float:
    """KL(train || batch) over normalized histograms, natural log.

    No smoothing: any training-supported bin that the batch leaves
    empty makes the divergence +infinity.
    """
    n_train, n_infer = _checked_counts(train_freq, infer_freq, n_train, n_infer)
    total = 0.0
    for t, b in zip(train_freq, infer_freq):
        if t == 0:
            continue
        if b == 0:
            return math.inf
        p = t / n_train
        q = b / n_infer
        total += p * math.log(p / q)
    # Tiny negative residue is floating-point noise; KL is non-negative.
    return max(0.0, total)


def rmse(
    train_freq: Sequence[int],
    infer_freq: Sequence[int],
    n_train: Optional[int] = None,
    n_infer: Optional[int] = None,
) -> float:
    """Root mean square difference of the normalized histograms.

    fsum keeps the result independent of bin order, so relabelling
    categories never changes the value.
    """
    n_train, n_infer = _checked_counts(train_freq, infer_freq, n_train, n_infer)
    squares = []
    for t, b in zip(train_freq, infer_freq):
        diff = t / n_train - b / n_infer
        squares.append(diff * diff)
    return math.sqrt(math.fsum(squares) / len(train_freq))


def wasserstein1d(
    train_freq: Sequence[int],
    infer_freq: Sequence[int],
    n_train: Optional[int] = None,
    n_infer: Optional[int] = None,
    positions: Optional[Sequence[float]] = None,
) -> float:
    """Earth-mover distance on the ordered 1-D support.

    Sums |CDF difference| * gap over consecutive positions. Categorical
    features use index positions 0..C-1 (the default when positions is
    omitted).
    """
    n_train, n_infer = _checked_counts(train_freq, infer_freq, n_train, n_infer)
    if positions is None:
        positions = list(range(len(train_freq)))
    if len(positions) != len(train_freq):
        raise ValueError(f"got {len(positions)} positions for {len(train_freq)} bins")
    for lo, hi in zip(positions, positions[1:]):
        if not lo < hi:
            raise ValueError("positions must be strictly ascending")
    total = 0.0
    cdf_gap = 0.0
    for i in range(len(train_freq) - 1):
        cdf_gap += train_freq[i] / n_train - infer_freq[i] / n_infer
        total += abs(cdf_gap) * (positions[i + 1] - positions[i])
    return total


@dataclass(frozen=True)
class FeatureScore:
    """All four metrics for one feature on one batch."""

    name: str
    similarity_raw: float
    similarity: float
    kl: float
    rmse: float
    wasserstein: float

    def value(self, metric: str) -> float:
        if metric not in METRIC_NAMES:
            raise ValueError(f"unknown metric {metric!r}")
        return getattr(self, metric)


@dataclass(frozen=True)
class HealthScore:
    """Per-feature scores plus the top-k aggregate used for alerting."""

    features: tuple[FeatureScore, ...]
    aggregate: dict[str, float]
    selected: tuple[str, ...]

    def feature(self, name: str) -> FeatureScore:
        for score in self.features:
            if score.name == name:
                return score
        raise KeyError(f"no such feature: {name!r}")


def score_feature(
    feature: FeatureProfile, infer_freq: Sequence[int], n_infer: Optional[int] = None
) -> FeatureScore:
    """Compute all four metrics for one profile feature and batch counts."""
    raw, clipped = similarity(feature.freq, infer_freq, None, n_infer)
    return FeatureScore(
        name=feature.name,
        similarity_raw=raw,
        similarity=clipped,
        kl=kl_divergence(feature.freq, infer_freq, None, n_infer),
        rmse=rmse(feature.freq, infer_freq, None, n_infer),
        wasserstein=wasserstein1d(
            feature.freq, infer_freq, None, n_infer, feature.schema.positions()
        ),
    )


def aggregate(
    scores: Sequence[FeatureScore],
    importances: Sequence[float],
    k: int,
) -> HealthScore:
    """Average each metric over the k most important features.

    Ties in importance break by feature name, ascending, so selection
    is deterministic. The mean is unweighted; +infinity in any selected
    feature's KL makes the aggregate KL infinite.
    """
    if not scores:
        raise ValueError("no feature scores to aggregate")
    if len(importances) != len(scores):
        raise ValueError(f"got {len(importances)} importances for {len(scores)} features")
    if not 1 <= k <= len(scores):
        raise ValueError(f"k must be in 1..{len(scores)}, got {k}")
    ranked = sorted(zip(scores, importances), key=lambda pair: (-pair[1], pair[0].name))
    chosen = [pair[0] for pair in ranked[:k]]
    agg = {
        metric: sum(score.value(metric) for score in chosen) / k for metric in METRIC_NAMES
    }
    return HealthScore(
        features=tuple(scores),
        aggregate=agg,
        selected=tuple(score.name for score in chosen),
    )


def score_batch(
    profile: TrainingProfile, batch: InferenceBatchStats, k: Optional[int] = None
) -> HealthScore:
    """Score every profile feature against the batch and aggregate."""
    if k is None:
        k = min(DEFAULT_TOP_K, len(profile.features))
    scores = [
        score_feature(feat, batch.freq_for(feat.name), batch.n_infer)
        for feat in profile.features
    ]
    return aggregate(scores, [f.importance for f in profile.features], k)


# ---------------------------------------------------------------------------
# Wire format


def health_score_to_doc(score: HealthScore) -> dict[str, Any]:
    return {
        "features": [
            {
                "name": s.name,
                "similarity": s.similarity,
                "similarity_raw": s.similarity_raw,
                "kl": s.kl,
                "rmse": s.rmse,
                "wasserstein": s.wasserstein,
            }
            for s in score.features
        ],
        "aggregate": dict(score.aggregate),
        "selected": list(score.selected),
    }


def health_score_from_doc(doc: dict[str, Any]) -> HealthScore:
    def _num(value: Any) -> float:
        return math.inf if value == "inf" else float(value)

    return HealthScore(
        features=tuple(
            FeatureScore(
                name=entry["name"],
                similarity_raw=_num(entry["similarity_raw"]),
                similarity=_num(entry["similarity"]),
                kl=_num(entry["kl"]),
                rmse=_num(entry["rmse"]),
                wasserstein=_num(entry["wasserstein"]),
            )
            for entry in doc["features"]
        ),
        aggregate={name: _num(value) for name, value in doc["aggregate"].items()},
        selected=tuple(doc["selected"]),
    )
