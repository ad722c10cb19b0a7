"""Alert policies applied to health scores.

A policy names a metric, a threshold, and a scope (the aggregate score,
any selected feature, or an explicit feature group). Low similarity is
bad, high divergence is bad, so similarity policies trigger below their
threshold and the divergence metrics above.

Thresholds can be fixed up front, or auto-configured from the first few
inference runs: the threshold is placed a margin epsilon outside the
worst value observed during warmup, so the first drift past normal
variation trips it. No alert is ever emitted while the warmup window is
still filling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .metrics import HealthScore, METRIC_NAMES, health_score_from_doc, health_score_to_doc, score_batch
from .profile import InferenceBatchStats, TrainingProfile, now_ms

SCOPE_AGGREGATE = "aggregate"
SCOPE_PER_FEATURE = "per_feature"
SCOPE_FEATURE_GROUP = "feature_group"
SCOPES = (SCOPE_AGGREGATE, SCOPE_PER_FEATURE, SCOPE_FEATURE_GROUP)

BELOW = "below"
ABOVE = "above"

SEVERITY_WARNING = "warning"
SEVERITY_CRITICAL = "critical"

DEFAULT_EPSILON = 0.05
DEFAULT_WARMUP_RUNS = 3


def direction_for(metric: str) -> str:
    """similarity alerts when low; the divergence metrics when high."""
    if metric not in METRIC_NAMES:
        raise ValueError(f"unknown metric {metric!r}")
    return BELOW if metric == "similarity" else ABOVE


@dataclass(frozen=True)
class AlertPolicy:
    metric: str = "similarity"
    threshold: Optional[float] = None  # None = auto mode, pending warmup
    scope: str = SCOPE_AGGREGATE
    group: tuple[str, ...] = ()
    auto: bool = False
    epsilon: float = DEFAULT_EPSILON
    warmup_runs: int = DEFAULT_WARMUP_RUNS
    updated_at: Optional[int] = None

    def __post_init__(self) -> None:
        direction_for(self.metric)  # validates the metric name
        if self.scope not in SCOPES:
            raise ValueError(f"unknown scope {self.scope!r}")
        if self.scope == SCOPE_FEATURE_GROUP and not self.group:
            raise ValueError("feature_group scope needs a non-empty group")
        if self.scope != SCOPE_FEATURE_GROUP and self.group:
            raise ValueError("group is only valid with feature_group scope")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.warmup_runs < 1:
            raise ValueError("warmup_runs must be >= 1")
        if self.threshold is None and not self.auto:
            raise ValueError("a non-auto policy needs a threshold")
        if self.threshold is not None and not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    @property
    def direction(self) -> str:
        return direction_for(self.metric)

    def violated_by(self, value: float) -> bool:
        if self.threshold is None:
            return False
        if self.direction == BELOW:
            return value < self.threshold
        return value > self.threshold


@dataclass(frozen=True)
class AlertRecord:
    title: str
    description: str
    severity: str
    metric: str
    value: float
    threshold: float
    model_id: str
    batch_id: str
    timestamp: int
    source: str = "internal"

    def __post_init__(self) -> None:
        if not self.title:
            raise ValueError("alert title must be non-empty")


@dataclass(frozen=True)
class HealthReport:
    """The outcome of scoring one batch: the score plus any alert."""

    model_id: str
    batch_id: str
    score: HealthScore
    alert: Optional[AlertRecord] = None


@dataclass
class HistoryEntry:
    batch_id: str
    timestamp: int
    score: HealthScore


@dataclass
class ScoreHistory:
    """Ordered scores for one model; the only mutable state here."""

    model_id: str
    entries: list[HistoryEntry] = field(default_factory=list)

    def append(self, batch_id: str, timestamp: int, score: HealthScore) -> None:
        if self.entries and timestamp < self.entries[-1].timestamp:
            raise ValueError(
                f"timestamp {timestamp} is before the last entry {self.entries[-1].timestamp}"
            )
        self.entries.append(HistoryEntry(batch_id, timestamp, score))

    def __len__(self) -> int:
        return len(self.entries)


def _observed_value(score: HealthScore, policy: AlertPolicy) -> float:
    """The single value the policy watches, given its scope.

    For feature scopes this is the worst value across the watched
    features: the minimum for below-direction metrics, the maximum for
    above-direction ones.
    """
    if policy.scope == SCOPE_AGGREGATE:
        return score.aggregate[policy.metric]
    if policy.scope == SCOPE_PER_FEATURE:
        names = score.selected
    else:
        names = policy.group
    values = [score.feature(name).value(policy.metric) for name in names]
    return min(values) if policy.direction == BELOW else max(values)


def _violators(score: HealthScore, policy: AlertPolicy) -> list[tuple[str, float]]:
    if policy.scope == SCOPE_AGGREGATE:
        return []
    names = score.selected if policy.scope == SCOPE_PER_FEATURE else policy.group
    return [
        (name, score.feature(name).value(policy.metric))
        for name in names
        if policy.violated_by(score.feature(name).value(policy.metric))
    ]


def _severity(value: float, policy: AlertPolicy) -> str:
    # One margin of epsilon past the threshold upgrades to critical.
    assert policy.threshold is not None
    depth = policy.threshold - value if policy.direction == BELOW else value - policy.threshold
    return SEVERITY_CRITICAL if depth > policy.epsilon else SEVERITY_WARNING


def evaluate_batch(
    profile: TrainingProfile,
    batch: InferenceBatchStats,
    policy: AlertPolicy,
    k: Optional[int] = None,
) -> HealthReport:
    """Score a batch and apply the policy.

    Emits at most one alert per batch; with a feature scope, all
    violating features are listed inside the single alert. A policy
    whose auto threshold has not been configured yet produces a report
    with no alert.
    """
    score = score_batch(profile, batch, k)
    alert = None
    if policy.threshold is not None:
        value = _observed_value(score, policy)
        if policy.violated_by(value):
            violators = _violators(score, policy)
            if violators:
                detail = ", ".join(f"{name}={val:.4g}" for name, val in violators)
                description = f"feature(s) past threshold {policy.threshold:.4g}: {detail}"
            else:
                description = (
                    f"aggregate {policy.metric} {value:.4g} is {policy.direction} "
                    f"threshold {policy.threshold:.4g}"
                )
            alert = AlertRecord(
                title=f"{policy.metric} {policy.direction} threshold",
                description=description,
                severity=_severity(value, policy),
                metric=policy.metric,
                value=value,
                threshold=policy.threshold,
                model_id=profile.model_id,
                batch_id=batch.batch_id,
                timestamp=batch.timestamp,
            )
    return HealthReport(
        model_id=profile.model_id, batch_id=batch.batch_id, score=score, alert=alert
    )


def auto_threshold(history: ScoreHistory, policy: AlertPolicy) -> AlertPolicy:
    """Fill in the threshold from the first warmup_runs scores.

    Below-direction metrics get min(observed) - epsilon, above-direction
    ones max(observed) + epsilon: the first excursion more than epsilon
    past anything seen during warmup will alert.
    """
    k = policy.warmup_runs
    if len(history) < k:
        raise ValueError(f"insufficient history: have {len(history)} runs, need {k}")
    observed = [_observed_value(entry.score, policy) for entry in history.entries[:k]]
    if policy.direction == BELOW:
        threshold = min(observed) - policy.epsilon
    else:
        threshold = max(observed) + policy.epsilon
    if not math.isfinite(threshold):
        raise ValueError(
            f"warmup produced a non-finite {policy.metric} baseline; cannot auto-configure"
        )
    return replace(policy, threshold=threshold)


def manual_threshold_update(policy: AlertPolicy, new_threshold: float) -> AlertPolicy:
    """Operator override; keeps everything else, stamps the change time."""
    if not math.isfinite(new_threshold):
        raise ValueError(f"threshold must be finite, got {new_threshold}")
    return replace(policy, threshold=new_threshold, updated_at=now_ms())


# ---------------------------------------------------------------------------
# Wire format


def alert_to_doc(alert: AlertRecord) -> dict[str, Any]:
    return {
        "title": alert.title,
        "description": alert.description,
        "severity": alert.severity,
        "metric": alert.metric,
        "value": alert.value,
        "threshold": alert.threshold,
        "model_id": alert.model_id,
        "batch_id": alert.batch_id,
        "timestamp": alert.timestamp,
        "source": alert.source,
    }


def alert_from_doc(doc: dict[str, Any]) -> AlertRecord:
    value = doc["value"]
    return AlertRecord(
        title=doc["title"],
        description=doc.get("description", ""),
        severity=doc.get("severity", SEVERITY_WARNING),
        metric=doc["metric"],
        value=math.inf if value == "inf" else float(value),
        threshold=float(doc["threshold"]),
        model_id=doc.get("model_id", ""),
        batch_id=doc.get("batch_id", ""),
        timestamp=int(doc.get("timestamp", 0)),
        source=doc.get("source", "internal"),
    )


def report_to_doc(report: HealthReport) -> dict[str, Any]:
    return {
        "model_id": report.model_id,
        "batch_id": report.batch_id,
        "score": health_score_to_doc(report.score),
        "alert": alert_to_doc(report.alert) if report.alert else None,
    }


def report_from_doc(doc: dict[str, Any]) -> HealthReport:
    return HealthReport(
        model_id=doc["model_id"],
        batch_id=doc["batch_id"],
        score=health_score_from_doc(doc["score"]),
        alert=alert_from_doc(doc["alert"]) if doc.get("alert") else None,
    )


def policy_to_doc(policy: AlertPolicy) -> dict[str, Any]:
    return {
        "metric": policy.metric,
        "threshold": policy.threshold,
        "scope": policy.scope,
        "group": list(policy.group),
        "auto": policy.auto,
        "epsilon": policy.epsilon,
        "warmup_runs": policy.warmup_runs,
    }


def policy_from_doc(doc: dict[str, Any]) -> AlertPolicy:
    threshold = doc.get("threshold")
    return AlertPolicy(
        metric=doc.get("metric", "similarity"),
        threshold=None if threshold is None else float(threshold),
        scope=doc.get("scope", SCOPE_AGGREGATE),
        group=tuple(doc.get("group", ())),
        auto=bool(doc.get("auto", False)),
        epsilon=float(doc.get("epsilon", DEFAULT_EPSILON)),
        warmup_runs=int(doc.get("warmup_runs", DEFAULT_WARMUP_RUNS)),
    )
