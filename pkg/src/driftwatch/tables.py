"""Rectangular in-memory tables and the CSV format they load from.

A cell is a finite float, a string label, or None (missing). CSV cells
are parsed number-else-label; empty cells are missing. This is the raw
ingestion layer underneath profiling; it carries no schema information.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

Cell = Union[float, str, None]


def parse_cell(text: str) -> Cell:
    """number-else-label for one raw CSV cell; '' means missing."""
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        return text
    # Non-finite numerals ("nan", "inf") are kept as labels: they are
    # anomalies worth surfacing, not usable measurements.
    if not math.isfinite(value):
        return text
    return value


def format_cell(cell: Cell) -> str:
    if cell is None:
        return ""
    if isinstance(cell, float):
        return label_for(cell)
    return cell


def label_for(value: float) -> str:
    """Canonical string label for a numeric cell used as a category."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class DataTable:
    """Immutable rectangular table with unique column names."""

    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("column names must be unique")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise ValueError(f"row {i} has {len(row)} cells, expected {len(self.columns)}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list[Cell]:
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise KeyError(f"no such column: {name!r}") from None
        return [row[idx] for row in self.rows]

    @classmethod
    def from_rows(cls, columns: Sequence[str], rows: Iterable[Sequence[Cell]]) -> "DataTable":
        return cls(tuple(columns), tuple(tuple(r) for r in rows))

    @classmethod
    def from_columns(cls, named_columns: dict[str, Sequence[Cell]]) -> "DataTable":
        names = tuple(named_columns)
        lengths = {len(v) for v in named_columns.values()}
        if len(lengths) > 1:
            raise ValueError("columns have differing lengths")
        n = lengths.pop() if lengths else 0
        rows = tuple(tuple(named_columns[name][i] for name in names) for i in range(n))
        return cls(names, rows)


def read_csv(path: str | Path) -> DataTable:
    """Load a table: header row of column names, cells number-else-label."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV, expected a header row") from None
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} cells, got {len(raw)}")
            rows.append(tuple(parse_cell(c) for c in raw))
    return DataTable(tuple(header), tuple(rows))


def write_csv(table: DataTable, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_cell(c) for c in row])
