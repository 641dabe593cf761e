import json

import numpy as np
import pandas as pd
import pytest

from helios.data import POWER_CHANNEL, align_join, ingest_csv, load_schema, resample_mean
from helios.exceptions import ConfigurationError, ValidationError
from helios.synth import (
    CLIMATE_PRESETS, ClimateParams, clear_sky_ghi, day_length_hours, default_schema,
    generate_domain, make_domain_pair, preset, shifted_params, solar_elevation, with_noise_channels,
    write_domain_csv,
)


class TestClimate:
    def test_presets(self):
        assert set(CLIMATE_PRESETS) == {"sunny-dry", "humid-cloudy", "temperate-seasonal"}
        assert preset("humid-cloudy").cloudiness > preset("sunny-dry").cloudiness

    def test_preset_is_a_copy(self):
        params = preset("sunny-dry")
        params.seed = 999
        assert preset("sunny-dry").seed == 11

    def test_unknown_preset(self):
        with pytest.raises(ConfigurationError):
            preset("arctic")

    @pytest.mark.parametrize("kwargs", [{"cloudiness": 1.5}, {"seasonality": -0.1},
                                        {"peak_ghi": -1.0}, {"capacity_kw": 0.0},
                                        {"wind_direction": 360.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            ClimateParams(**kwargs)

    def test_from_dict(self):
        params = ClimateParams.from_dict({"name": "x", "seed": "4", "cloudiness": "0.5"})
        assert (params.name, params.seed, params.cloudiness) == ("x", 4, 0.5)
        with pytest.raises(ConfigurationError):
            ClimateParams.from_dict({"altitude": 300})
        with pytest.raises(ConfigurationError):
            ClimateParams.from_dict({"cloudiness": "overcast"})


class TestSolarGeometry:
    def test_equinox_day_length(self):
        assert day_length_hours(80, 0.5) == pytest.approx(12.0)
        assert day_length_hours(80 + 91, 0.5) > 12.0

    def test_elevation_profile(self):
        stamps = pd.DatetimeIndex(["2021-03-21 00:00", "2021-03-21 06:00", "2021-03-21 12:00",
                                   "2021-03-21 18:00"], tz="UTC")
        np.testing.assert_allclose(solar_elevation(stamps, 0.4), [0.0, 0.0, 1.0, 0.0], atol=1e-12)

    def test_noise_free_noon_equals_peak(self):
        params = ClimateParams(cloudiness=0.0, peak_ghi=900.0, seasonality=0.3).noise_free()
        frame = generate_domain(params, n_days=1, start="2021-03-21")
        noon = frame.timestamps.get_loc(pd.Timestamp("2021-03-21 12:00", tz="UTC"))
        assert frame.column("ghi")[noon] == pytest.approx(900.0)
        assert clear_sky_ghi(frame.timestamps[noon:noon + 1], params)[0] == pytest.approx(900.0)


class TestGenerate:
    @pytest.fixture(scope="class")
    def year(self):
        return generate_domain(preset("sunny-dry"), n_days=365)

    def test_one_year_of_half_hours(self, year):
        assert len(year) == 17520
        assert year.step == pd.Timedelta("30min")
        assert POWER_CHANNEL in year.channels
        assert len(year.channels) == 11

    def test_night_power_is_zero(self, year):
        night = solar_elevation(year.timestamps, preset("sunny-dry").seasonality) == 0.0
        assert np.all(year.column(POWER_CHANNEL)[night] == 0.0)
        assert np.all(year.column("ghi")[night] == 0.0)
        assert np.mean(year.column(POWER_CHANNEL) == 0.0) == pytest.approx(0.5, abs=0.05)

    def test_power_within_capacity(self, year):
        power = year.column(POWER_CHANNEL)
        assert power.min() >= 0.0
        assert power.max() <= preset("sunny-dry").capacity_kw

    def test_deterministic(self, small_climate):
        a = generate_domain(small_climate, n_days=3)
        b = generate_domain(small_climate, n_days=3)
        for name in a.channels:
            np.testing.assert_array_equal(a.column(name), b.column(name))

    def test_seed_changes_output(self, small_climate):
        other = ClimateParams(**{**small_climate.to_dict(), "seed": small_climate.seed + 1})
        a = generate_domain(small_climate, n_days=3)
        b = generate_domain(other, n_days=3)
        assert not np.array_equal(a.column("temp"), b.column("temp"))

    def test_invalid_grid(self, small_climate):
        with pytest.raises(ValidationError):
            generate_domain(small_climate, n_days=0)
        with pytest.raises(ValidationError):
            generate_domain(small_climate, n_days=1, step="7min")

    def test_noise_channels(self, small_frame):
        noisy = with_noise_channels(small_frame, 3, seed=1)
        assert [c for c in noisy.channels if c.startswith("noise_")] == ["noise_0", "noise_1",
                                                                         "noise_2"]
        np.testing.assert_array_equal(noisy.column("ghi"), small_frame.column("ghi"))


class TestShift:
    def test_zero_shift_keeps_climate(self):
        base = preset("sunny-dry")
        same = shifted_params(base, 0.0)
        assert (same.cloudiness, same.temp_mean, same.peak_ghi) == (base.cloudiness, base.temp_mean,
                                                                    base.peak_ghi)
        assert same.seed != base.seed

    def test_shift_moves_climate(self):
        base = preset("sunny-dry")
        moved = shifted_params(base, 1.0)
        assert moved.cloudiness > base.cloudiness
        assert moved.temp_mean > base.temp_mean
        assert moved.peak_ghi < base.peak_ghi

    def test_negative_shift(self):
        with pytest.raises(ValidationError):
            shifted_params(preset("sunny-dry"), -0.5)

    def test_pair(self, small_climate):
        source, target = make_domain_pair(small_climate, shift=1.0, n_days=5)
        assert len(source) == len(target) == 240
        assert target.column("temp").mean() > source.column("temp").mean()


class TestExport:
    def test_round_trip_through_ingestion(self, small_climate, tmp_path):
        frame = generate_domain(small_climate, n_days=2)
        paths = write_domain_csv(frame, str(tmp_path), "unit")
        weather = ingest_csv(paths["weather"], load_schema(paths["weather_schema"]))
        solar = ingest_csv(paths["solar"], load_schema(paths["solar_schema"]))
        assert solar.step == pd.Timedelta("5min")
        assert len(solar) == 6 * len(frame)

        solar = resample_mean(solar, "30min")
        joined, report = align_join(weather, solar)
        assert report.dropped == 0
        np.testing.assert_allclose(joined.column(POWER_CHANNEL), frame.column(POWER_CHANNEL),
                                   atol=1e-4)
        np.testing.assert_allclose(joined.column("ghi"), frame.column("ghi"), atol=1e-5)

    def test_schema_files(self, small_frame, tmp_path):
        paths = write_domain_csv(small_frame, str(tmp_path), "unit")
        with open(paths["solar_schema"]) as fh:
            payload = json.load(fh)
        assert payload["channels"] == {"Power(kW)": POWER_CHANNEL}
        assert load_schema(paths["weather_schema"]) == default_schema("weather")

    def test_same_step_export(self, small_frame, tmp_path):
        paths = write_domain_csv(small_frame, str(tmp_path), "unit", solar_step=None)
        solar = ingest_csv(paths["solar"], load_schema(paths["solar_schema"]))
        assert len(solar) == len(small_frame)

    def test_bad_solar_step(self, small_frame, tmp_path):
        with pytest.raises(ValidationError):
            write_domain_csv(small_frame, str(tmp_path), "unit", solar_step="7min")

    def test_unknown_schema_kind(self):
        with pytest.raises(ValidationError):
            default_schema("radar")
