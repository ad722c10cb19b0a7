"""Client-side histogram counting against a fetched training profile.

The gateway documents a fixed slot layout per profiled feature: categorical
features get one slot per vocabulary entry plus a trailing slot for unseen
labels; continuous features get an underflow slot, one slot per interior bin
(half-open, the last closed on the right), and a trailing overflow slot that
also absorbs missing and non-numeric cells. Counting locally against that
layout lets a pipeline ship compact frequency vectors instead of raw rows,
and the gateway scores them exactly as if it had binned the rows itself.
"""

from __future__ import annotations

import math
from typing import Any, Mapping, Sequence

Cell = Any  # None, float, or str after normalization


def numeric_label(value: float) -> str:
    """Render a number the way the gateway names categorical vocabulary."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def parse_label(text: str) -> Cell:
    """Interpret a string cell: empty means missing, numerals become floats.

    Non-finite numerals ("inf", "nan") stay labels and no whitespace is
    stripped, mirroring how the gateway reads CSV fields.
    """
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        return text
    return value if math.isfinite(value) else text


def normalize_cell(cell: Any) -> Cell:
    """Coerce one user-supplied cell to the gateway's cell model."""
    if cell is None:
        return None
    if isinstance(cell, bool):
        return float(cell)
    if isinstance(cell, (int, float)):
        value = float(cell)
        if not math.isfinite(value):
            raise ValueError(f"numeric cells must be finite, got {cell!r}")
        return value
    if isinstance(cell, str):
        return parse_label(cell)
    raise ValueError(f"unsupported cell type {type(cell).__name__!r}")


def tabularize(data: Any) -> tuple[list[str], list[list[Cell]]]:
    """Turn column-major or row-major input into (columns, rows).

    Accepts a mapping of column name to cell sequence, or a sequence of
    record mappings sharing one key set. Cells pass through normalize_cell.
    """
    if isinstance(data, Mapping):
        columns = [str(name) for name in data]
        if not columns:
            raise ValueError("data must contain at least one column")
        series = [list(data[name]) for name in data]
        length = len(series[0])
        if any(len(s) != length for s in series):
            raise ValueError("columns must all have the same length")
        if length == 0:
            raise ValueError("data must contain at least one row")
        rows = [
            [normalize_cell(s[i]) for s in series]
            for i in range(length)
        ]
        return columns, rows
    if isinstance(data, Sequence) and not isinstance(data, (str, bytes)):
        records = list(data)
        if not records:
            raise ValueError("data must contain at least one row")
        first = records[0]
        if not isinstance(first, Mapping):
            raise ValueError("row-major data must be a sequence of mappings")
        columns = [str(name) for name in first]
        key_set = set(columns)
        rows = []
        for i, record in enumerate(records):
            if not isinstance(record, Mapping) or set(record) != key_set:
                raise ValueError(f"row {i} does not match the first row's columns")
            rows.append([normalize_cell(record[name]) for name in columns])
        return columns, rows
    raise ValueError(
        "data must be a mapping of columns or a sequence of record mappings"
    )


def slot_for(cell: Cell, feature: Mapping[str, Any]) -> int:
    """Map one normalized cell to its 0-based slot in a profile feature."""
    if feature["kind"] == "categorical":
        categories = feature["categories"]
        if cell is None:
            return len(categories)
        label = numeric_label(cell) if isinstance(cell, float) else cell
        try:
            return categories.index(label)
        except ValueError:
            return len(categories)
    edges = feature["edges"]
    overflow = len(edges)  # underflow + (len(edges) - 1) interior bins precede it
    if cell is None or not isinstance(cell, float):
        return overflow
    if cell < edges[0]:
        return 0
    if cell > edges[-1]:
        return overflow
    if cell == edges[-1]:
        return len(edges) - 1
    for i in range(1, len(edges)):
        if cell < edges[i]:
            return i
    return len(edges) - 1


def feature_slots(feature: Mapping[str, Any]) -> int:
    if feature["kind"] == "categorical":
        return len(feature["categories"]) + 1
    return len(feature["edges"]) + 1


def batch_doc(
    profile: Mapping[str, Any],
    columns: Sequence[str],
    rows: Sequence[Sequence[Cell]],
    batch_id: str = "",
    timestamp: int | None = None,
) -> dict[str, Any]:
    """Count a table into the inference-stats document the gateway scores.

    Every profiled feature must be present as a column; extra columns are
    ignored. Frequencies follow the profile's slot layout per feature.
    """
    position = {name: i for i, name in enumerate(columns)}
    features = []
    for feature in profile["features"]:
        name = feature["name"]
        if name not in position:
            raise ValueError(f"data is missing profiled column {name!r}")
        slots = feature_slots(feature)
        if len(feature["freq"]) != slots:
            raise ValueError(f"profile feature {name!r} has an inconsistent layout")
        freq = [0] * slots
        col = position[name]
        for row in rows:
            freq[slot_for(row[col], feature)] += 1
        features.append({"name": name, "freq": freq})
    doc: dict[str, Any] = {
        "model_id": profile["model_id"],
        "batch_id": batch_id,
        "n_infer": len(rows),
        "features": features,
    }
    if timestamp is not None:
        doc["timestamp"] = int(timestamp)
    return doc
