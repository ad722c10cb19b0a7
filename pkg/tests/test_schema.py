"""Feature typing, bin construction, and value-to-slot assignment."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from driftwatch.schema import (
    CATEGORICAL,
    CONTINUOUS,
    DEFAULT_N_BINS,
    BinSpec,
    FeatureSchema,
    compute_bins,
    discretize,
    infer_schema,
)
from driftwatch.tables import DataTable


def continuous_schema(edges):
    return FeatureSchema(name="x", kind=CONTINUOUS, categories=None, bins=BinSpec(edges=tuple(edges)))


def categorical_schema(categories):
    return FeatureSchema(name="c", kind=CATEGORICAL, categories=tuple(categories), bins=None)


class TestComputeBins:
    def test_equal_width_edges(self):
        spec = compute_bins([0.0, 10.0], n_bins=2)
        assert spec.edges == (0.0, 5.0, 10.0)

    def test_constant_values_get_unit_pad(self):
        # a degenerate range still yields a usable, strictly ascending edge list
        spec = compute_bins([3.0, 3.0, 3.0], n_bins=2)
        assert spec.edges[0] < spec.edges[-1]
        assert all(a < b for a, b in zip(spec.edges, spec.edges[1:]))
        assert spec.edges[0] <= 3.0 <= spec.edges[-1]

    def test_requested_bin_count_honored(self):
        spec = compute_bins([0.0, 1.0], n_bins=7)
        assert spec.n_interior == 7
        assert spec.n_bins == 9

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            compute_bins([], n_bins=4)

    @given(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=1,
            max_size=50,
        ),
        st.integers(min_value=1, max_value=20),
    )
    def test_edges_always_strictly_ascending_and_cover_data(self, values, n_bins):
        spec = compute_bins(values, n_bins=n_bins)
        assert all(a < b for a, b in zip(spec.edges, spec.edges[1:]))
        assert spec.edges[0] <= min(values)
        assert spec.edges[-1] >= max(values)


class TestDiscretizeContinuous:
    SCHEMA = None

    def setup_method(self):
        self.schema = continuous_schema([0.0, 5.0, 10.0])

    def test_interior_assignment(self):
        assert discretize(0.0, self.schema) == 1
        assert discretize(2.5, self.schema) == 1
        assert discretize(5.0, self.schema) == 2
        assert discretize(10.0, self.schema) == 2  # top edge closes right

    def test_underflow_and_overflow(self):
        assert discretize(-3.0, self.schema) == 0
        assert discretize(12.0, self.schema) == 3

    def test_missing_and_nonnumeric_land_in_overflow(self):
        assert discretize(None, self.schema) == 3
        assert discretize("oops", self.schema) == 3

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_every_float_gets_a_valid_slot(self, value):
        slot = discretize(value, self.schema)
        assert 0 <= slot < self.schema.bins.n_bins


class TestDiscretizeCategorical:
    def setup_method(self):
        self.schema = categorical_schema(["x", "y", "z"])

    def test_known_categories_map_to_position(self):
        assert discretize("x", self.schema) == 0
        assert discretize("z", self.schema) == 2

    def test_unseen_values_share_the_reserved_slot(self):
        unseen = self.schema.unseen_index
        assert unseen == 3
        assert discretize("w", self.schema) == unseen
        assert discretize(None, self.schema) == unseen
        assert discretize(3.5, self.schema) == unseen


class TestInferSchema:
    def test_numeric_column_becomes_continuous(self):
        table = DataTable.from_columns({"x": [0.1 * i for i in range(30)]})
        (schema,) = infer_schema(table)
        assert schema.kind == CONTINUOUS
        assert schema.bins.n_interior == DEFAULT_N_BINS

    def test_string_column_becomes_categorical_sorted(self):
        table = DataTable.from_columns({"c": ["b", "a", "b", "c"]})
        (schema,) = infer_schema(table)
        assert schema.kind == CATEGORICAL
        assert schema.categories == ("a", "b", "c")

    def test_numeric_only_column_defaults_to_continuous(self):
        table = DataTable.from_columns({"code": [1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]})
        (schema,) = infer_schema(table)
        assert schema.kind == CONTINUOUS

    def test_override_forces_categorical_codes(self):
        # integer-coded enums need the override to be treated as labels
        table = DataTable.from_columns({"code": [1.0, 2.0, 1.0, 2.0]})
        (schema,) = infer_schema(table, overrides={"code": CATEGORICAL})
        assert schema.kind == CATEGORICAL
        assert schema.categories == ("1", "2")

    def test_single_label_cell_makes_the_column_categorical(self):
        table = DataTable.from_columns({"x": [1.0, 2.0, "oops", 4.0]})
        (schema,) = infer_schema(table)
        assert schema.kind == CATEGORICAL

    def test_unknown_override_name_rejected(self):
        table = DataTable.from_columns({"x": [1.0]})
        with pytest.raises(ValueError):
            infer_schema(table, overrides={"nope": CONTINUOUS})

    def test_all_missing_column_rejected(self):
        table = DataTable.from_columns({"x": [None, None]})
        with pytest.raises(ValueError):
            infer_schema(table)

    def test_bin_labels_and_positions_align(self):
        schema = continuous_schema([0.0, 5.0, 10.0])
        labels = schema.bin_labels()
        positions = schema.positions()
        assert len(labels) == len(positions) == 4
        assert positions == [-2.5, 2.5, 7.5, 12.5]
        assert all(a < b for a, b in zip(positions, positions[1:]))
