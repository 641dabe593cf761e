import json

import numpy as np
import pandas as pd
import pytest
from sklearn.preprocessing import StandardScaler

from helios.data import (
    BinningScheme, ChannelSchema, LabeledDataset, TimeSeriesFrame, align_join, assign_label, assign_labels,
    drop_missing, fit_bins, fit_standardizer, apply_standardizer, ingest_csv, load_dataset,
    load_schema, prepare_domain, resample_mean, save_dataset, split_chronological, split_sizes,
)
from helios.exceptions import (
    AlignmentError, BinningError, ConfigurationError, DataFormatError, IngestionError,
    ResamplingError, ValidationError,
)
from helios.synth import generate_domain


def _frame(values, start="2021-06-01 00:00", step="5min", name="ghi"):
    index = pd.date_range(start, periods=len(values), freq=step, tz="UTC")
    return TimeSeriesFrame(index, {name: np.asarray(values, dtype=float)}, {name: "W/m2"},
                           step=pd.Timedelta(step))


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestChannelSchema:
    def test_load_schema(self, tmp_path):
        path = _write(tmp_path, "schema.json", json.dumps({
            "timestamp": "Time", "channels": {"GHI": "ghi"}, "timezone": "US/Pacific"}))
        schema = load_schema(path)
        assert schema.channels == {"GHI": "ghi"}
        assert schema.timezone == "US/Pacific"
        assert schema.unit_of("ghi") == "W/m2"

    def test_missing_schema_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_schema(str(tmp_path / "nope.json"))

    def test_duplicate_targets_rejected(self):
        with pytest.raises(ConfigurationError):
            ChannelSchema("Time", {"GHI": "ghi", "Global": "ghi"})


class TestIngest:
    def test_two_rows(self, tmp_path):
        path = _write(tmp_path, "w.csv", "Time,GHI\n2021-01-01 00:30,5\n2021-01-01 00:00,1.5\n")
        frame = ingest_csv(path, ChannelSchema("Time", {"GHI": "GHI"}))
        assert len(frame) == 2
        assert frame.channel_names == ("GHI",)
        # sorted by timestamp
        np.testing.assert_array_equal(frame.column("GHI"), [1.5, 5.0])
        assert frame.step == pd.Timedelta("30min")

    def test_non_numeric_value_names_line(self, tmp_path):
        path = _write(tmp_path, "w.csv", "Time,GHI\n2021-01-01 00:00,1\n2021-01-01 00:30,abc\n")
        with pytest.raises(IngestionError) as info:
            ingest_csv(path, ChannelSchema("Time", {"GHI": "ghi"}))
        assert info.value.line == 3
        assert "line 3" in str(info.value)

    def test_duplicate_timestamp(self, tmp_path):
        path = _write(tmp_path, "w.csv", "Time,GHI\n2021-01-01 00:00,1\n2021-01-01 00:00,2\n")
        with pytest.raises(IngestionError, match="duplicate"):
            ingest_csv(path, ChannelSchema("Time", {"GHI": "ghi"}))

    def test_missing_mapped_column(self, tmp_path):
        path = _write(tmp_path, "w.csv", "Time,GHI\n2021-01-01 00:00,1\n")
        with pytest.raises(IngestionError, match="DNI"):
            ingest_csv(path, ChannelSchema("Time", {"GHI": "ghi", "DNI": "dni"}))

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError):
            ingest_csv(str(tmp_path / "absent.csv"), ChannelSchema("Time", {"GHI": "ghi"}))

    def test_empty_cells_become_nan(self, tmp_path):
        path = _write(tmp_path, "w.csv", "Time,GHI\n2021-01-01 00:00,\n2021-01-01 00:30,NA\n")
        frame = ingest_csv(path, ChannelSchema("Time", {"GHI": "ghi"}))
        assert np.isnan(frame.column("ghi")).all()

    def test_naive_timestamps_localized(self, tmp_path):
        path = _write(tmp_path, "w.csv", "Time,GHI\n2021-01-01 00:00,1\n2021-01-01 01:00,2\n")
        frame = ingest_csv(path, ChannelSchema("Time", {"GHI": "ghi"}, timezone="Etc/GMT+8"))
        assert frame.timestamps[0] == pd.Timestamp("2021-01-01 08:00", tz="UTC")

    def test_iso_timestamps_with_offset(self, tmp_path):
        path = _write(tmp_path, "w.csv", "Time,GHI\n2021-01-01T00:00:00+02:00,1\n")
        frame = ingest_csv(path, ChannelSchema("Time", {"GHI": "ghi"}))
        assert frame.timestamps[0] == pd.Timestamp("2020-12-31 22:00", tz="UTC")


class TestFrame:
    def test_channel_length_mismatch(self):
        index = pd.date_range("2021-01-01", periods=3, freq="30min", tz="UTC")
        with pytest.raises(ValidationError):
            TimeSeriesFrame(index, {"ghi": np.zeros(2)}, {})

    def test_off_grid_rejected(self):
        index = pd.DatetimeIndex(["2021-01-01 00:00", "2021-01-01 00:30", "2021-01-01 00:45"],
                                 tz="UTC")
        with pytest.raises(ValidationError):
            TimeSeriesFrame(index, {"ghi": np.zeros(3)}, {}, step=pd.Timedelta("30min"))


class TestResample:
    def test_window_mean(self):
        out = resample_mean(_frame([0, 0, 0, 6, 6, 6]), "30min")
        assert len(out) == 1
        assert out.column("ghi")[0] == 3.0
        assert out.timestamps[0] == pd.Timestamp("2021-06-01 00:00", tz="UTC")
        assert out.step == pd.Timedelta("30min")

    def test_constant_series(self):
        out = resample_mean(_frame([4.25] * 36), "1h")
        np.testing.assert_array_equal(out.column("ghi"), [4.25, 4.25, 4.25])

    def test_matches_reference_mean(self, rng):
        values = rng.uniform(0, 100, size=12)
        out = resample_mean(_frame(values), "30min")
        expected = [sum(values[0:6]) / 6, sum(values[6:12]) / 6]
        np.testing.assert_allclose(out.column("ghi"), expected, rtol=1e-12)

    def test_total_preserved(self, rng):
        values = rng.uniform(0, 10, size=60)
        out = resample_mean(_frame(values), "30min")
        assert out.column("ghi").sum() * 6 == pytest.approx(values.sum(), rel=1e-9)

    def test_non_multiple_step(self):
        with pytest.raises(ResamplingError):
            resample_mean(_frame([1.0] * 12), "7min")

    def test_nan_in_window(self):
        with pytest.raises(ResamplingError, match="NaN"):
            resample_mean(_frame([1, 2, np.nan, 4, 5, 6]), "30min")

    def test_incomplete_windows_dropped(self):
        # starts at :10, so the first window (:00-:30) has only 4 of 6 values
        out = resample_mean(_frame([1.0] * 10, start="2021-06-01 00:10"), "30min")
        assert len(out) == 1
        assert out.timestamps[0] == pd.Timestamp("2021-06-01 00:30", tz="UTC")


class TestAlignJoin:
    def _pair(self, n=5, weather_offset=0):
        index = pd.date_range("2021-01-01", periods=n + weather_offset, freq="30min", tz="UTC")
        weather = TimeSeriesFrame(index, {"ghi": np.arange(n + weather_offset, dtype=float)}, {})
        solar = TimeSeriesFrame(index[weather_offset:], {"power_kw": np.arange(n, dtype=float) * 2},
                                {"power_kw": "kW"})
        return weather, solar

    def test_identical_timestamps(self):
        joined, report = align_join(*self._pair())
        assert len(joined) == 5
        assert report.dropped == 0
        assert joined.channel_names == ("ghi", "power_kw")

    def test_extra_leading_weather_row(self):
        joined, report = align_join(*self._pair(weather_offset=1))
        assert len(joined) == 5
        assert report.dropped == 1
        assert report.dropped_weather == 1
        np.testing.assert_array_equal(joined.column("ghi"), [1, 2, 3, 4, 5])

    def test_shuffled_inputs_give_same_join(self, rng):
        weather, solar = self._pair(n=20)
        order = rng.permutation(20)
        shuffled = TimeSeriesFrame.from_frame(weather.to_frame().iloc[order])
        joined_a, _ = align_join(weather, solar)
        joined_b, _ = align_join(shuffled, solar)
        assert joined_a.timestamps.equals(joined_b.timestamps)
        np.testing.assert_array_equal(joined_a.column("ghi"), joined_b.column("ghi"))

    def test_no_overlap(self):
        weather, _ = self._pair()
        index = pd.date_range("2022-01-01", periods=3, freq="30min", tz="UTC")
        solar = TimeSeriesFrame(index, {"power_kw": np.ones(3)}, {})
        with pytest.raises(AlignmentError):
            align_join(weather, solar)

    def test_step_mismatch(self):
        weather, _ = self._pair()
        with pytest.raises(AlignmentError):
            align_join(weather, _frame([1.0] * 4, name="power_kw"))

    def test_drop_missing_counts(self):
        weather, solar = self._pair()
        values = weather.column("ghi").copy()
        values[2] = np.nan
        frame = TimeSeriesFrame(weather.timestamps, {"ghi": values}, {})
        cleaned, n = drop_missing(frame)
        assert n == 1
        assert len(cleaned) == 4


class TestBinning:
    def test_equal_width_edges(self):
        scheme = fit_bins([0, 10, 55, 100], 5)
        assert scheme.edges == (0.0, 20.0, 40.0, 60.0, 80.0, 100.0)

    def test_deterministic(self, rng):
        power = rng.uniform(0, 731.3, size=500)
        assert fit_bins(power, 5).edges == fit_bins(power.copy(), 5).edges

    @pytest.mark.parametrize("power,n", [([1, 2], 1), ([0, 0, 0], 5), ([], 5), ([-1, 3], 5)])
    def test_invalid(self, power, n):
        with pytest.raises(BinningError):
            fit_bins(power, n)

    def test_boundaries(self):
        scheme = fit_bins([0, 100], 5)
        assert assign_label(0.0, scheme) == 0
        assert assign_label(20.0, scheme) == 1
        assert assign_label(100.0, scheme) == 4

    def test_clamping_counted(self):
        scheme = fit_bins([0, 100], 5)
        labels, clamped = assign_labels([50.0, 120.0, 101.0], scheme)
        assert labels.tolist() == [2, 4, 4]
        assert clamped == 2

    def test_negative_power(self):
        with pytest.raises(BinningError):
            assign_label(-0.5, fit_bins([0, 100], 5))

    def test_matches_linear_scan(self, rng):
        scheme = fit_bins(rng.uniform(0, 437.0, size=50), 5)
        power = rng.uniform(0, scheme.upper, size=1000)

        def scan(p):
            for i in range(scheme.n_classes):
                if scheme.edges[i] <= p < scheme.edges[i + 1]:
                    return i
            return scheme.n_classes - 1

        labels, _ = assign_labels(power, scheme)
        assert labels.tolist() == [scan(p) for p in power]

    def test_monotone(self, rng):
        scheme = fit_bins([0, 90], 5)
        power = np.sort(rng.uniform(0, 120, size=300))
        labels, _ = assign_labels(power, scheme)
        assert np.all(np.diff(labels) >= 0)

    def test_night_heavy_year_has_modal_class_zero(self, small_domain):
        histogram = small_domain.train.label_histogram()
        assert histogram[0] == histogram.max()
        assert histogram[0] > histogram[1:].max()

    def test_scheme_validation(self):
        with pytest.raises(BinningError):
            BinningScheme(2, (0.0, 2.0, 1.0))
        with pytest.raises(BinningError):
            BinningScheme(2, (1.0, 2.0, 3.0))


class TestSplit:
    def test_sizes(self):
        assert split_sizes(100, (0.7, 0.15, 0.15)) == [70, 15, 15]
        assert split_sizes(10, (0.8, 0.1, 0.1)) == [8, 1, 1]

    def test_partition_preserves_order(self):
        data = np.arange(57)
        parts = split_chronological(data, (0.7, 0.15, 0.15))
        assert [len(p) for p in parts] == [40, 9, 8]
        np.testing.assert_array_equal(np.concatenate(parts), data)
        for part, exact in zip(parts, (0.7, 0.15, 0.15)):
            assert abs(len(part) - 57 * exact) < 1

    @pytest.mark.parametrize("ratios", [(0.5, 0.5, 0.1), (0.8, 0.2, 0.0), (1.0, 0.0)])
    def test_bad_ratios(self, ratios):
        with pytest.raises(ValidationError):
            split_chronological(np.arange(10), ratios)

    def test_empty_part(self):
        with pytest.raises(ValidationError):
            split_chronological(np.arange(3), (0.9, 0.05, 0.05))

    def test_frames_split_in_time_order(self, small_frame):
        train, val, test = split_chronological(small_frame)
        assert train.timestamps[-1] < val.timestamps[0] < test.timestamps[0]
        assert len(train) + len(val) + len(test) == len(small_frame)


class TestStandardizer:
    def test_symmetric_column(self):
        stats = fit_standardizer(np.array([[1.0], [2.0], [3.0]]))
        assert stats.mean[0] == 2.0
        assert stats.std[0] == pytest.approx(np.sqrt(2.0 / 3.0))
        out = apply_standardizer(np.array([[1.0], [2.0], [3.0]]), stats)
        assert out[1, 0] == 0.0
        assert out[0, 0] == pytest.approx(-out[2, 0])

    def test_train_moments(self, rng):
        x = rng.normal(5.0, 3.0, size=(400, 3))
        z = fit_standardizer(x).transform(x)
        assert np.all(np.abs(z.mean(axis=0)) < 1e-6)
        np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-6)

    def test_matches_sklearn(self, rng):
        x = rng.normal(size=(100, 4)) * [1, 10, 0.1, 3]
        np.testing.assert_allclose(fit_standardizer(x).transform(x),
                                   StandardScaler().fit_transform(x), atol=1e-12)

    def test_round_trip(self, rng):
        x = rng.normal(size=(50, 3))
        stats = fit_standardizer(x)
        np.testing.assert_allclose(stats.inverse_transform(stats.transform(x)), x, atol=1e-9)

    def test_constant_column_floored(self, caplog):
        x = np.column_stack([np.ones(10), np.arange(10.0)])
        stats = fit_standardizer(x, ("const", "ramp"))
        assert stats.std[0] == 1e-8
        assert any("floored" in r.getMessage() for r in caplog.records)


class TestDataset:
    def test_prepare_domain_splits(self, small_domain):
        train, val, test = small_domain.splits
        assert (len(train), len(val), len(test)) == (672, 144, 144)
        assert train.split_tag == "train" and test.split_tag == "test"
        assert train.standardizer is val.standardizer
        assert train.binning.domain_id == "unit"
        assert small_domain.summary["rows"] == {"train": 672, "val": 144, "test": 144}
        assert len(train.feature_names) == 10

    def test_one_year_at_30_minutes(self, small_climate):
        frame = generate_domain(small_climate, n_days=365)
        assert len(frame) == 17520
        prepared = prepare_domain(frame, "year")
        assert sum(len(ds) for ds in prepared.splits) == 17520

    def test_save_load_round_trip(self, small_domain, tmp_path):
        save_dataset(small_domain.test, str(tmp_path / "test"))
        loaded = load_dataset(str(tmp_path / "test"))
        np.testing.assert_array_equal(loaded.features, small_domain.test.features)
        np.testing.assert_array_equal(loaded.labels, small_domain.test.labels)
        assert loaded.binning == small_domain.test.binning
        np.testing.assert_array_equal(loaded.standardizer.mean, small_domain.test.standardizer.mean)
        assert loaded.split_tag == "test"

    def test_meta_is_deterministic(self, small_domain, tmp_path):
        save_dataset(small_domain.val, str(tmp_path / "a"))
        save_dataset(small_domain.val, str(tmp_path / "b"))
        assert (tmp_path / "a" / "meta.json").read_bytes() == (tmp_path / "b" / "meta.json").read_bytes()

    def test_unknown_format_version(self, small_domain, tmp_path):
        directory = tmp_path / "ds"
        save_dataset(small_domain.val, str(directory))
        meta = json.loads((directory / "meta.json").read_text())
        meta["format_version"] = "9"
        (directory / "meta.json").write_text(json.dumps(meta))
        with pytest.raises(DataFormatError):
            load_dataset(str(directory))

    def test_restandardize(self, small_domain):
        test = small_domain.test
        raw = test.restandardize(None)
        assert raw.standardizer is None
        np.testing.assert_allclose(raw.features, test.raw_features())
        other = fit_standardizer(raw.features, test.feature_names)
        moved = test.restandardize(other)
        np.testing.assert_allclose(moved.features.mean(axis=0), 0.0, atol=1e-9)

    def test_select_narrows_standardizer(self, small_domain):
        reduced = small_domain.train.select(["temp", "ghi"])
        assert reduced.feature_names == ("temp", "ghi")
        assert reduced.standardizer.feature_names == ("temp", "ghi")
        with pytest.raises(ValidationError):
            small_domain.train.select(["nope"])

    def test_no_nan_features(self):
        with pytest.raises(ValidationError):
            LabeledDataset(np.array([[np.nan]]), [0], ("a",), BinningScheme(2, (0, 1, 2)))
