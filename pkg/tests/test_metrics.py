"""Metric definitions: hand-computed oracle values plus algebraic invariants."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from driftwatch.metrics import (
    FeatureScore,
    HealthScore,
    health_score_from_doc,
    health_score_to_doc,
    kl_divergence,
    rmse,
    score_batch,
    similarity,
    similarity_naive,
    wasserstein1d,
)
from driftwatch.profile import batch_frequencies, build_profile
from driftwatch.schema import infer_schema
from driftwatch.tables import DataTable

# strategies shared across the invariants below: count vectors are short
# histograms with at least one observation on each side
count_vectors = st.lists(st.integers(min_value=0, max_value=500), min_size=1, max_size=50)


def paired_counts():
    return st.integers(min_value=1, max_value=50).flatmap(
        lambda n: st.tuples(
            st.lists(st.integers(min_value=0, max_value=500), min_size=n, max_size=n),
            st.lists(st.integers(min_value=0, max_value=500), min_size=n, max_size=n),
        )
    ).filter(lambda pair: sum(pair[0]) > 0 and sum(pair[1]) > 0)


class TestSimilarityOracles:
    def test_proportional_batch_scores_exactly_one(self):
        # batch [1,7,2,0] is training [10,70,20,0] divided by ten
        assert similarity([10, 70, 20, 0], [1, 7, 2, 0]) == (1.0, 1.0)

    def test_all_mass_on_rarest_bin(self):
        # p = [.1,.7,.2]; mean p = .1; sum p^2 = .54; .1/.54
        raw, clipped = similarity([10, 70, 20, 0], [10, 0, 0, 0])
        assert raw == 0.18518518518518517
        assert clipped == raw

    def test_all_mass_on_commonest_bin_clips(self):
        # .7/.54 exceeds one: concentrating on well-trained bins is not drift
        raw, clipped = similarity([10, 70, 20, 0], [0, 10, 0, 0])
        assert raw == 1.2962962962962963
        assert clipped == 1.0

    def test_explicit_totals_must_match(self):
        with pytest.raises(ValueError):
            similarity([10, 70, 20], [1, 7, 2], n_train=99)
        with pytest.raises(ValueError):
            similarity([10, 70, 20], [1, 7, 2], n_infer=11)

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(ValueError):
            similarity([1, 2], [1])
        with pytest.raises(ValueError):
            similarity([0, 0], [1, 1])
        with pytest.raises(ValueError):
            similarity([1, 1], [0, 0])
        with pytest.raises(ValueError):
            similarity([-1, 2], [1, 1])


class TestSimilarityNaive:
    def test_single_sample_is_scaled_probability(self):
        assert similarity_naive([10, 70, 20], 100, [0]) == 0.18518518518518517

    def test_mean_over_samples(self):
        value = similarity_naive([10, 70, 20], 100, [0, 1])
        assert math.isclose(value, (0.1 + 0.7) / 2 / 0.54, rel_tol=1e-12)

    def test_out_of_range_sample_rejected(self):
        with pytest.raises(ValueError):
            similarity_naive([10, 70, 20], 100, [3])


class TestSimilarityInvariants:
    @given(
        st.lists(st.integers(min_value=0, max_value=1000), min_size=1, max_size=50).filter(
            lambda f: sum(f) > 0
        ),
        st.integers(min_value=1, max_value=20),
    )
    def test_proportional_batches_score_one_exactly(self, train, k):
        raw, clipped = similarity(train, [k * t for t in train])
        assert raw == 1.0
        assert clipped == 1.0

    @given(paired_counts())
    def test_raw_is_nonnegative_and_clip_caps_at_one(self, pair):
        train, infer = pair
        raw, clipped = similarity(train, infer)
        assert raw >= 0.0
        assert clipped == min(1.0, raw)
        assert clipped <= 1.0

    @given(paired_counts(), st.integers(min_value=2, max_value=9))
    def test_scaling_either_histogram_changes_nothing(self, pair, k):
        train, infer = pair
        base = similarity(train, infer)
        assert similarity([k * t for t in train], infer) == pytest.approx(base, rel=1e-12)
        assert similarity(train, [k * b for b in infer]) == pytest.approx(base, rel=1e-12)

    @given(paired_counts())
    def test_frequency_form_equals_per_sample_mean(self, pair):
        train, infer = pair
        raw, _ = similarity(train, infer)
        samples = [i for i, count in enumerate(infer) for _ in range(count)]
        naive = similarity_naive(train, sum(train), samples)
        assert math.isclose(raw, naive, rel_tol=1e-9)


class TestKlOracles:
    def test_hand_value_natural_log(self):
        # 0.5*ln(.5/.25) + 0.5*ln(.5/.75)
        assert kl_divergence([50, 50], [25, 75]) == pytest.approx(
            0.14384103622589042, abs=1e-15
        )

    def test_identical_histograms_give_zero(self):
        assert kl_divergence([10, 30, 60], [10, 30, 60]) == 0.0

    def test_empty_batch_bin_under_training_mass_is_infinite(self):
        assert kl_divergence([50, 50], [50, 0]) == math.inf

    def test_empty_training_bin_is_skipped(self):
        value = kl_divergence([50, 0], [25, 25])
        assert math.isfinite(value)

    @given(paired_counts())
    def test_nonnegative_everywhere(self, pair):
        train, infer = pair
        assert kl_divergence(train, infer) >= 0.0


class TestRmseOracles:
    def test_hand_value(self):
        assert rmse([50, 50], [0, 100]) == 0.5

    def test_three_bin_value(self):
        assert rmse([1, 1, 0], [0, 1, 1]) == math.sqrt(1 / 6)

    def test_symmetric_under_swap_exactly(self):
        # swapping mass between equal-frequency bins must not move the value
        a = rmse([30, 30, 40], [10, 0, 90])
        b = rmse([30, 30, 40], [0, 10, 90])
        assert a == b

    @given(paired_counts())
    def test_argument_order_is_irrelevant(self, pair):
        train, infer = pair
        assert rmse(train, infer) == rmse(infer, train)

    @given(paired_counts())
    def test_zero_iff_same_distribution(self, pair):
        train, infer = pair
        value = rmse(train, [t * 3 for t in train])
        assert value == pytest.approx(0.0, abs=1e-15)
        assert rmse(train, infer) >= 0.0


class TestWassersteinOracles:
    def test_unit_spacing_mass_moves_two_bins(self):
        assert wasserstein1d([1, 0, 0], [0, 0, 1]) == 2.0

    def test_explicit_positions_weight_the_gaps(self):
        assert wasserstein1d([1, 0, 0], [0, 0, 1], positions=[0.0, 0.5, 2.5]) == 2.5

    def test_identical_histograms_give_zero(self):
        assert wasserstein1d([5, 5], [5, 5]) == 0.0

    def test_adjacent_shift_is_one(self):
        assert wasserstein1d([1, 0], [0, 1]) == 1.0

    def test_positions_must_ascend(self):
        with pytest.raises(ValueError):
            wasserstein1d([1, 0], [0, 1], positions=[1.0, 1.0])

    def test_positions_length_must_match(self):
        with pytest.raises(ValueError):
            wasserstein1d([1, 0], [0, 1], positions=[0.0, 1.0, 2.0])

    @given(paired_counts())
    def test_symmetric_and_nonnegative(self, pair):
        train, infer = pair
        assert wasserstein1d(train, infer) == pytest.approx(
            wasserstein1d(infer, train), abs=1e-12
        )
        assert wasserstein1d(train, infer) >= 0.0


class TestAsymmetry:
    """Rare-heavy batches score lower than common-heavy ones; RMSE cannot tell."""

    def test_similarity_orders_rare_below_common(self):
        train = [10, 70, 20, 0]
        sim_rare = similarity(train, [1, 0, 0, 0])[1]
        sim_common = similarity(train, [0, 1, 0, 0])[1]
        assert sim_rare < sim_common

    def test_rmse_is_blind_to_which_bin_gained(self):
        train = [30, 30, 40]
        assert rmse(train, [20, 40, 40]) == rmse(train, [40, 20, 40])


def three_feature_profile():
    table = DataTable.from_columns(
        {"a": ["x", "y"] * 20, "b": [1.0, 2.0] * 20, "c": ["p", "q"] * 20}
    )
    return build_profile(
        table, infer_schema(table), model_id="m", importances=[0.5, 0.3, 0.2]
    )


class TestScoreBatch:
    def test_identity_batch_aggregates_to_one(self):
        profile = three_feature_profile()
        table = DataTable.from_columns(
            {"a": ["x", "y"] * 5, "b": [1.0, 2.0] * 5, "c": ["p", "q"] * 5}
        )
        score = score_batch(profile, batch_frequencies(table, profile))
        assert score.aggregate["similarity"] == 1.0
        assert score.aggregate["rmse"] == 0.0

    def test_top_k_selects_heaviest_features(self):
        profile = three_feature_profile()
        table = DataTable.from_columns(
            {"a": ["x"] * 4, "b": [1.0] * 4, "c": ["p"] * 4}
        )
        score = score_batch(profile, batch_frequencies(table, profile), k=2)
        assert score.selected == ("a", "b")
        assert len(score.features) == 3  # every feature still scored

    def test_k_defaults_to_at_most_five(self):
        table = DataTable.from_columns(
            {f"f{i}": [float(i), float(i + 1)] * 10 for i in range(7)}
        )
        profile = build_profile(table, infer_schema(table), model_id="m")
        score = score_batch(profile, batch_frequencies(table, profile))
        assert len(score.selected) == 5

    def test_unknown_feature_lookup_raises(self):
        profile = three_feature_profile()
        table = DataTable.from_columns(
            {"a": ["x"], "b": [1.0], "c": ["p"]}
        )
        score = score_batch(profile, batch_frequencies(table, profile))
        with pytest.raises(KeyError):
            score.feature("zzz")
        with pytest.raises(ValueError):
            score.features[0].value("nope")


class TestHealthScoreDocs:
    def test_round_trip_preserves_values(self):
        profile = three_feature_profile()
        table = DataTable.from_columns(
            {"a": ["x"] * 6, "b": [1.0] * 6, "c": ["p"] * 6}
        )
        score = score_batch(profile, batch_frequencies(table, profile))
        assert any(math.isinf(f.kl) for f in score.features)
        doc = health_score_to_doc(score)
        assert health_score_from_doc(doc) == score
