"""Per-feature schemas: categorical vocabularies and continuous bins.

Schemas are fixed at training time. Every feature, once discretized,
is a categorical histogram with one extra reserved slot:

* categorical features reserve a trailing "unseen" index for labels
  (or missing values) never observed in training;
* continuous features carry two open-ended bins, underflow below the
  first edge and overflow above the last; missing values land in the
  overflow slot.

The reserved slots make discretize a total function, so a batch can
never fail to be counted, only be counted as unfamiliar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .tables import Cell, DataTable, label_for

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"

DEFAULT_N_BINS = 10


@dataclass(frozen=True)
class BinSpec:
    """Equal-width interior bin edges plus implicit under/overflow bins."""

    edges: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.edges) < 2:
            raise ValueError("need at least two edges for one bin")
        for lo, hi in zip(self.edges, self.edges[1:]):
            if not lo < hi:
                raise ValueError(f"edges must be strictly increasing, got {lo} >= {hi}")
        if not all(math.isfinite(e) for e in self.edges):
            raise ValueError("edges must be finite")

    @property
    def n_interior(self) -> int:
        return len(self.edges) - 1

    @property
    def n_bins(self) -> int:
        """Total bin count including underflow and overflow."""
        return self.n_interior + 2

    def centers(self) -> list[float]:
        """Ascending representative positions, one per bin.

        Interior bins use midpoints; the open-ended bins sit half a
        neighboring bin-width outside the edge span, which keeps the
        sequence strictly ascending for ground-distance computations.
        """
        mids = [(lo + hi) / 2.0 for lo, hi in zip(self.edges, self.edges[1:])]
        first_w = self.edges[1] - self.edges[0]
        last_w = self.edges[-1] - self.edges[-2]
        return [self.edges[0] - first_w / 2.0] + mids + [self.edges[-1] + last_w / 2.0]


@dataclass(frozen=True)
class FeatureSchema:
    name: str
    kind: str
    categories: Optional[tuple[str, ...]] = None
    bins: Optional[BinSpec] = None

    def __post_init__(self) -> None:
        if self.kind == CATEGORICAL:
            if self.categories is None or self.bins is not None:
                raise ValueError(f"{self.name}: categorical schema must carry categories only")
            if not self.categories:
                raise ValueError(f"{self.name}: categories must be non-empty")
            if len(set(self.categories)) != len(self.categories):
                raise ValueError(f"{self.name}: category labels must be unique")
        elif self.kind == CONTINUOUS:
            if self.bins is None or self.categories is not None:
                raise ValueError(f"{self.name}: continuous schema must carry bins only")
        else:
            raise ValueError(f"{self.name}: unknown kind {self.kind!r}")

    @property
    def category_count(self) -> int:
        """Histogram length, including the reserved unseen/overflow slot."""
        if self.kind == CATEGORICAL:
            assert self.categories is not None
            return len(self.categories) + 1
        assert self.bins is not None
        return self.bins.n_bins

    @property
    def unseen_index(self) -> int:
        return self.category_count - 1

    def positions(self) -> list[float]:
        """Ascending ground positions for earth-mover distances."""
        if self.kind == CONTINUOUS:
            assert self.bins is not None
            return self.bins.centers()
        return [float(i) for i in range(self.category_count)]

    def bin_labels(self) -> list[str]:
        """Display label per histogram slot."""
        if self.kind == CATEGORICAL:
            assert self.categories is not None
            return list(self.categories) + ["<unseen>"]
        assert self.bins is not None
        e = self.bins.edges
        labels = [f"<{e[0]:g}"]
        labels += [f"[{lo:g},{hi:g})" for lo, hi in zip(e, e[1:])]
        labels[-1] = labels[-1][:-1] + "]"
        labels.append(f">{e[-1]:g}")
        return labels


def compute_bins(values: Sequence[float], n_bins: int = DEFAULT_N_BINS) -> BinSpec:
    """Equal-width edges spanning [min, max] of the finite values.

    A zero-range column degenerates to the single bin [min, min+1) so the
    spec still has one interior bin.
    """
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    finite = [v for v in values if isinstance(v, (int, float)) and math.isfinite(v)]
    if not finite:
        raise ValueError("cannot compute bins without at least one finite value")
    lo, hi = min(finite), max(finite)
    if lo == hi:
        return BinSpec((float(lo), float(lo) + 1.0))
    width = (hi - lo) / n_bins
    edges = [lo + i * width for i in range(n_bins)] + [hi]
    return BinSpec(tuple(float(e) for e in edges))


def discretize(value: Cell, schema: FeatureSchema) -> int:
    """Map one cell to its 0-based histogram index. Total: never raises.

    Continuous: index 0 is underflow, 1..B are the interior bins
    [e_i, e_{i+1}) with the last one closed on the right, B+1 is
    overflow. Missing values and stray labels take the overflow slot.

    Categorical: position in the training vocabulary, or the reserved
    trailing index for unknown labels and missing values.
    """
    if schema.kind == CATEGORICAL:
        assert schema.categories is not None
        if value is None:
            return schema.unseen_index
        label = label_for(float(value)) if isinstance(value, (int, float)) else value
        try:
            return schema.categories.index(label)
        except ValueError:
            return schema.unseen_index
    assert schema.bins is not None
    edges = schema.bins.edges
    if value is None or not isinstance(value, (int, float)):
        return schema.unseen_index
    if value < edges[0]:
        return 0
    if value > edges[-1]:
        return schema.unseen_index
    if value == edges[-1]:
        return schema.bins.n_interior  # last interior bin is closed on the right
    for i in range(1, len(edges)):
        if value < edges[i]:
            return i
    return schema.bins.n_interior


def infer_schema(
    table: DataTable,
    overrides: Optional[Mapping[str, str]] = None,
    n_bins: int = DEFAULT_N_BINS,
) -> list[FeatureSchema]:
    """Infer one schema per column.

    A column is categorical iff it contains any label cell or the
    override says so; otherwise it is continuous with equal-width bins
    over its non-missing values. A column with zero non-missing values
    cannot be profiled and is an error.
    """
    if table.n_rows == 0:
        raise ValueError("cannot infer schemas from an empty table")
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(table.columns)
    if unknown:
        raise ValueError(f"override for unknown column(s): {sorted(unknown)}")
    for kind in overrides.values():
        if kind not in (CATEGORICAL, CONTINUOUS):
            raise ValueError(f"override kind must be categorical or continuous, got {kind!r}")

    schemas = []
    for name in table.columns:
        cells = [c for c in table.column(name) if c is not None]
        if not cells:
            raise ValueError(f"column {name!r} has no non-missing values")
        has_labels = any(isinstance(c, str) for c in cells)
        kind = overrides.get(name, CATEGORICAL if has_labels else CONTINUOUS)
        if kind == CATEGORICAL:
            schemas.append(FeatureSchema(name, CATEGORICAL, categories=_category_order(cells)))
        else:
            numeric = [c for c in cells if isinstance(c, float)]
            if not numeric:
                raise ValueError(f"column {name!r} forced continuous but has no numeric values")
            schemas.append(FeatureSchema(name, CONTINUOUS, bins=compute_bins(numeric, n_bins)))
    return schemas


def _category_order(cells: list[Cell]) -> tuple[str, ...]:
    # Sorted for determinism: shuffling training rows must not change
    # the schema. Numeric-only vocabularies sort by value, not lexically.
    distinct = set(cells)
    if all(isinstance(c, float) for c in distinct):
        return tuple(label_for(c) for c in sorted(distinct))  # type: ignore[arg-type]
    return tuple(sorted(label_for(c) if isinstance(c, float) else str(c) for c in distinct))
