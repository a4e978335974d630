"""Feature extractors, column layout, and matrix assembly."""

from __future__ import annotations

import numpy as np
import pytest

from emg_affect.errors import (
    EmptyMatrix,
    EmptySlot,
    NonFinite,
    RaggedRows,
    TooFewSamples,
)
from emg_affect.features import (
    FeatureKind,
    FeatureMatrix,
    FeatureVector,
    aac,
    build_matrix,
    column_index,
    column_label,
    columns_for_kinds,
    dasdv,
    extract_row,
    mav,
    mavslp,
    maxp,
    paaf,
    rms,
    wl,
)
from emg_affect.signals import (
    ANGRY_PROFILE,
    RELAXED_PROFILE,
    Condition,
    Label,
    SampleSeries,
    SynthProfile,
    generate_synthetic,
    partition_slots,
)
from tests import _oracles

ALL_EXTRACTORS = (maxp, mav, mavslp, paaf, rms, aac, dasdv, wl)


def random_slot(seed, n=None):
    rng = np.random.default_rng(seed)
    if n is None:
        n = int(rng.integers(3, 400))
    return rng.integers(0, 1000, size=n).astype(np.float64)


class TestOrdinals:
    def test_fixed_ordinals(self):
        assert [k.value for k in FeatureKind] == list(range(8))
        assert FeatureKind.MAXP == 0
        assert FeatureKind.MAV == 1
        assert FeatureKind.MAVSLP == 2
        assert FeatureKind.PAAF == 3
        assert FeatureKind.RMS == 4
        assert FeatureKind.AAC == 5
        assert FeatureKind.DASDV == 6
        assert FeatureKind.WL == 7


class TestKnownValues:
    def test_ramp(self):
        x = np.array([1.0, 2.0, 3.0])
        assert maxp(x) == 3.0
        assert mav(x) == 2.0
        assert wl(x) == 2.0
        assert aac(x) == 1.0
        assert dasdv(x) == 1.0
        assert rms(x) == pytest.approx(np.sqrt(14.0 / 3.0))
        assert paaf(x) == 0.0  # no strict local maximum on a ramp

    def test_single_peak(self):
        assert paaf(np.array([0.0, 5.0, 0.0])) == 1.0

    def test_peak_must_exceed_mean(self):
        # 3 is a local max but below the mean of 3.25.
        assert paaf(np.array([1.0, 3.0, 1.0, 8.0])) == 0.0

    def test_plateau_is_not_a_peak(self):
        assert paaf(np.array([0.0, 5.0, 5.0, 0.0])) == 0.0

    def test_mavslp_three_even_segments(self):
        x = np.array([1.0, 1.0, 1.0, 5.0, 5.0, 5.0, 9.0, 9.0, 9.0])
        assert mavslp(x) == 4.0

    def test_mavslp_remainder_to_last_segment(self):
        # 10 samples over 3 segments -> sizes 3, 3, 4. Segment MAVs are
        # 0, 3, and (6+6+6+18)/4 = 9, so the slope is mean(3, 6) = 4.5.
        # A 3,4,3 split would give 5.0 instead, so this pins the remainder
        # to the last segment.
        x = np.array([0.0] * 3 + [3.0] * 3 + [6.0, 6.0, 6.0, 18.0])
        assert mavslp(x) == pytest.approx(_oracles.mavslp_oracle(x))
        assert mavslp(x) == pytest.approx(4.5)

    def test_constant_series_signature(self):
        x = np.full(50, 7.0)
        got = [f(x) for f in ALL_EXTRACTORS]
        assert got == [7.0, 7.0, 0.0, 0.0, 7.0, 0.0, 0.0, 0.0]


class TestErrors:
    @pytest.mark.parametrize("fn", [maxp, mav, rms])
    def test_empty_slot(self, fn):
        with pytest.raises(EmptySlot):
            fn(np.array([]))

    @pytest.mark.parametrize("fn", [wl, aac, dasdv])
    def test_difference_features_need_two(self, fn):
        with pytest.raises(TooFewSamples):
            fn(np.array([4.0]))

    @pytest.mark.parametrize("fn", [paaf, mavslp])
    def test_structural_features_need_three(self, fn):
        with pytest.raises(TooFewSamples):
            fn(np.array([4.0, 5.0]))


class TestAgainstOracles:
    @pytest.mark.parametrize("seed", range(40))
    def test_sum_features_match_fsum(self, seed):
        x = random_slot(seed)
        assert mav(x) == pytest.approx(_oracles.mav_oracle(x), rel=1e-12)
        assert rms(x) == pytest.approx(_oracles.rms_oracle(x), rel=1e-12)
        assert wl(x) == pytest.approx(_oracles.wl_oracle(x), rel=1e-12)
        assert dasdv(x) == pytest.approx(_oracles.dasdv_oracle(x), rel=1e-12)
        assert mavslp(x) == pytest.approx(_oracles.mavslp_oracle(x), abs=1e-9)

    @pytest.mark.parametrize("seed", range(40))
    def test_counting_features_match_loops(self, seed):
        x = random_slot(seed + 1000)
        assert maxp(x) == _oracles.maxp_oracle(x)
        assert paaf(x) == _oracles.paaf_oracle(x)


class TestIdentities:
    @pytest.mark.parametrize("seed", range(30))
    def test_aac_is_wl_over_n_minus_one_bitwise(self, seed):
        x = random_slot(seed + 2000)
        assert aac(x) == wl(x) / (x.size - 1)

    @pytest.mark.parametrize("seed", range(30))
    def test_dasdv_dominates_aac(self, seed):
        # Quadratic mean of the increments is at least their absolute mean.
        x = random_slot(seed + 3000)
        assert dasdv(x) >= aac(x) - 1e-12

    @pytest.mark.parametrize("seed", range(20))
    def test_order_relations_for_nonnegative_input(self, seed):
        x = random_slot(seed + 4000)
        assert maxp(x) >= rms(x) - 1e-9
        assert rms(x) >= mav(x) - 1e-9

    @pytest.mark.parametrize("seed", range(10))
    def test_positive_scaling(self, seed):
        x = random_slot(seed + 5000)
        lam = 3.5
        for fn in (maxp, mav, rms, wl, aac, dasdv):
            assert fn(lam * x) == pytest.approx(lam * fn(x), rel=1e-12)
        assert paaf(lam * x) == paaf(x)  # peak structure is scale-invariant
        assert mavslp(lam * x) == pytest.approx(lam * mavslp(x), rel=1e-9, abs=1e-9)


class TestMonteCarloSeparation:
    def test_maxp_separates_profiles_in_most_trials(self):
        wins = 0
        trials = 1000
        for t in range(trials):
            relaxed = SynthProfile(
                label=Label.RELAXED,
                baseline=RELAXED_PROFILE.baseline,
                noise_sd=RELAXED_PROFILE.noise_sd,
                spike_rate_hz=RELAXED_PROFILE.spike_rate_hz,
                spike_amplitude_mean=RELAXED_PROFILE.spike_amplitude_mean,
                spike_duration_ms=RELAXED_PROFILE.spike_duration_ms,
                seed=t,
            )
            angry = SynthProfile(
                label=Label.ANGRY,
                baseline=ANGRY_PROFILE.baseline,
                noise_sd=ANGRY_PROFILE.noise_sd,
                spike_rate_hz=ANGRY_PROFILE.spike_rate_hz,
                spike_amplitude_mean=ANGRY_PROFILE.spike_amplitude_mean,
                spike_duration_ms=ANGRY_PROFILE.spike_duration_ms,
                seed=1_000_000 + t,
            )
            a = generate_synthetic(relaxed, 1.0).samples.astype(float)
            b = generate_synthetic(angry, 1.0).samples.astype(float)
            if maxp(b) > maxp(a):
                wins += 1
        assert wins >= 900


class TestColumnLayout:
    def test_index_formula(self):
        assert column_index(0, FeatureKind.MAXP) == 0
        assert column_index(0, FeatureKind.WL) == 7
        assert column_index(3, FeatureKind.RMS) == 3 * 8 + 4
        assert column_index(9, FeatureKind.WL) == 79

    def test_round_trip(self):
        for idx in range(80):
            slot, kind = column_label(idx)
            assert column_index(slot, kind) == idx

    def test_columns_for_kinds(self):
        cols = columns_for_kinds([FeatureKind.WL, FeatureKind.MAV], slot_count=10)
        assert cols == tuple(sorted(s * 8 + o for s in range(10) for o in (1, 7)))
        assert len(cols) == 20

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            column_index(-1, FeatureKind.MAV)
        with pytest.raises(ValueError):
            column_label(-1)


class TestExtractRow:
    def _series(self, n=200, seed=0):
        rng = np.random.default_rng(seed)
        return SampleSeries(
            sample_rate_hz=200,
            samples=rng.integers(0, 1000, size=n).astype(np.int64),
        )

    def test_slot_major_layout(self):
        series = self._series(100)
        part = partition_slots(series, 2)
        row = extract_row(series, part, Label.ANGRY, "u01", Condition.FIXED)
        assert len(row.values) == 16
        second_slot = series.samples[50:100].astype(float)
        expected = [f(second_slot) for f in ALL_EXTRACTORS]
        assert list(row.values[8:16]) == pytest.approx(expected)

    def test_centering_subtracts_series_mean(self):
        series = self._series(100, seed=3)
        part = partition_slots(series, 2)
        plain = extract_row(series, part, Label.ANGRY, "u01", Condition.FIXED)
        centered = extract_row(
            series, part, Label.ANGRY, "u01", Condition.FIXED, center=True
        )
        shifted = series.samples.astype(float) - series.samples.astype(float).mean()
        assert centered.values[column_index(0, FeatureKind.MAV)] == pytest.approx(
            mav(shifted[:50])
        )
        # Difference-based features are shift-invariant.
        assert centered.values[column_index(0, FeatureKind.WL)] == pytest.approx(
            plain.values[column_index(0, FeatureKind.WL)]
        )

    def test_vector_validation(self):
        with pytest.raises(ValueError):
            FeatureVector(
                values=(1.0,) * 7, label=Label.ANGRY, user_id="u", condition=Condition.FIXED
            )
        with pytest.raises(NonFinite):
            FeatureVector(
                values=(float("nan"),) * 8,
                label=Label.ANGRY,
                user_id="u",
                condition=Condition.FIXED,
            )


class TestBuildMatrix:
    def _rows(self, count=4, width_slots=2):
        rows = []
        for i in range(count):
            series = SampleSeries(
                sample_rate_hz=200,
                samples=np.random.default_rng(i).integers(0, 1000, 100).astype(np.int64),
            )
            part = partition_slots(series, width_slots)
            label = Label.ANGRY if i % 2 else Label.RELAXED
            rows.append(
                extract_row(series, part, label, f"u{i:02d}", Condition.FIXED)
            )
        return rows

    def test_shape_and_metadata(self):
        m = build_matrix(self._rows())
        assert (m.n_rows, m.n_cols) == (4, 16)
        assert m.slot_count == 2
        assert m.user_ids() == ("u00", "u01", "u02", "u03")
        assert len(m.column_labels) == 16
        assert m.values.dtype == np.float64

    def test_values_readonly(self):
        m = build_matrix(self._rows())
        with pytest.raises(ValueError):
            m.values[0, 0] = 1.0

    def test_take_preserves_columns(self):
        m = build_matrix(self._rows())
        sub = m.take([2, 0])
        assert sub.n_rows == 2
        assert sub.users == ("u02", "u00")
        np.testing.assert_array_equal(sub.values[0], m.values[2])
        assert sub.column_labels == m.column_labels

    def test_ragged_rows_raise(self):
        rows = self._rows(2, 2) + self._rows(1, 3)
        with pytest.raises(RaggedRows):
            build_matrix(rows)

    def test_empty_raises(self):
        with pytest.raises(EmptyMatrix):
            build_matrix([])


class TestCorpusMatrixShape:
    def test_forty_by_eighty(self, corpus_matrix):
        assert (corpus_matrix.n_rows, corpus_matrix.n_cols) == (40, 80)
        assert len(corpus_matrix.user_ids()) == 10
        labels = list(corpus_matrix.labels)
        assert labels.count(Label.ANGRY) == 20
        assert labels.count(Label.RELAXED) == 20
