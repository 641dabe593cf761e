"""
Synthetic weather and solar-power generator.

A small physics-flavored model: a half-sine clear-sky day whose length and
height follow the season, daily cloud cover attenuating irradiance, a diurnal
temperature wave, and a plant whose output saturates with irradiance and
derates with cell temperature. Hours are read off UTC timestamps as local
solar time.

Example:
    >>> source, target = make_domain_pair(preset("sunny-dry"), shift=1.0)
    >>> paths = write_domain_csv(source, "data/raw", "sunny-dry")
"""

import json
import os
from dataclasses import replace
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .climate import ClimateParams
from ..data import ChannelSchema, TimeSeriesFrame, DEFAULT_UNITS, POWER_CHANNEL
from ..exceptions import ValidationError
from ..logging import get_logger

logger = get_logger("helios.synth.generator")

StepLike = Union[str, pd.Timedelta]

DEFAULT_START = "2021-01-01"
DEFAULT_STEP = "30min"
SOLAR_STEP = "5min"

EQUINOX_DAY = 80
DAY = pd.Timedelta("1D")

# Exported CSV headers -> canonical channels.
WEATHER_HEADERS = {
    "GHI": "ghi",
    "DNI": "dni",
    "DHI": "dhi",
    "Temperature": "temp",
    "Pressure": "pressure",
    "Relative Humidity": "rh",
    "Dew Point": "dew_point",
    "Wind Direction": "wind_dir",
    "Wind Speed": "wind_speed",
    "Surface Albedo": "albedo",
}
SOLAR_HEADERS = {"Power(kW)": POWER_CHANNEL}
WEATHER_TIME_HEADER = "Timestamp"
SOLAR_TIME_HEADER = "LocalTime"


def _season(day_of_year: np.ndarray) -> np.ndarray:
    return np.sin(2.0 * np.pi * (day_of_year - EQUINOX_DAY) / 365.0)


def day_length_hours(day_of_year, seasonality: float) -> np.ndarray:
    """Hours between sunrise and sunset; 12 at the equinoxes."""
    return 12.0 + 2.0 * seasonality * _season(np.asarray(day_of_year, dtype=np.float64))


def solar_elevation(timestamps: pd.DatetimeIndex, seasonality: float) -> np.ndarray:
    """Half-sine daylight profile in [0, 1]; exactly 0 from sunset to sunrise."""
    hours = timestamps.hour + timestamps.minute / 60.0 + timestamps.second / 3600.0
    hours = np.asarray(hours, dtype=np.float64)
    day_len = day_length_hours(timestamps.dayofyear, seasonality)
    sunrise = 12.0 - day_len / 2.0
    phase = (hours - sunrise) / day_len
    daylight = (phase > 0.0) & (phase < 1.0)
    return np.where(daylight, np.sin(np.pi * np.clip(phase, 0.0, 1.0)), 0.0)


def clear_sky_ghi(timestamps: pd.DatetimeIndex, params: ClimateParams) -> np.ndarray:
    """Cloud-free, noise-free GHI in W/m2."""
    seasonal = 1.0 + 0.3 * params.seasonality * _season(np.asarray(timestamps.dayofyear, dtype=np.float64))
    return params.peak_ghi * seasonal * solar_elevation(timestamps, params.seasonality)


def _grid(n_days: int, step: StepLike, start: str) -> pd.DatetimeIndex:
    if n_days < 1:
        raise ValidationError(f"n_days must be >= 1, got {n_days}")
    step = pd.Timedelta(step)
    if step.value <= 0 or DAY.value % step.value != 0:
        raise ValidationError(f"step must divide one day evenly, got {step}")
    per_day = DAY.value // step.value
    return pd.date_range(start=pd.Timestamp(start), periods=n_days * per_day, freq=step, tz="UTC")


def generate_domain(params: ClimateParams, n_days: int = 365, step: StepLike = DEFAULT_STEP,
                    start: str = DEFAULT_START) -> TimeSeriesFrame:
    """
    Generate one location's weather channels and plant output.

    Args:
        params: climate of the location
        n_days: number of whole days
        step: sampling step; must divide a day
        start: first day (midnight UTC)

    Returns:
        TimeSeriesFrame with the ten weather channels and ``power_kw``

    Raises:
        ValidationError: If n_days < 1 or the step does not divide a day
    """
    timestamps = _grid(n_days, step, start)
    n = len(timestamps)
    per_day = n // n_days
    rng = np.random.default_rng(params.seed)

    hours = np.asarray(timestamps.hour + timestamps.minute / 60.0, dtype=np.float64)
    season = _season(np.asarray(timestamps.dayofyear, dtype=np.float64))
    elevation = solar_elevation(timestamps, params.seasonality)
    daylight = elevation > 0.0

    daily_cloud = params.cloudiness + params.cloud_noise * rng.standard_normal(n_days)
    cloud = np.repeat(daily_cloud, per_day) + 0.25 * params.cloud_noise * rng.standard_normal(n)
    cloud = np.clip(cloud, 0.0, 1.0)

    ghi = (clear_sky_ghi(timestamps, params) * (1.0 - 0.75 * cloud)
           + params.ghi_noise * elevation * rng.standard_normal(n))
    ghi = np.where(daylight, np.clip(ghi, 0.0, None), 0.0)
    dhi = ghi * (0.15 + 0.7 * cloud)
    dni = (ghi - dhi) / np.maximum(elevation, 0.2)

    temp = (params.temp_mean + 10.0 * params.seasonality * season
            + params.temp_amplitude * np.sin(2.0 * np.pi * (hours - 9.0) / 24.0)
            - 3.0 * cloud + params.temp_noise * rng.standard_normal(n))
    rh = np.clip(60.0 + 30.0 * cloud - 1.5 * (temp - params.temp_mean)
                 + 2.0 * params.temp_noise * rng.standard_normal(n), 5.0, 100.0)
    dew_point = temp - (100.0 - rh) / 5.0
    pressure = 1013.25 - 8.0 * cloud + 0.5 * params.temp_noise * rng.standard_normal(n)

    wind_speed = np.clip(params.wind_speed_mean * (1.0 + 0.3 * np.sin(2.0 * np.pi * (hours - 8.0) / 24.0))
                         + params.wind_noise * rng.standard_normal(n), 0.0, None)
    wind_dir = np.mod(params.wind_direction + 15.0 * params.wind_noise * rng.standard_normal(n), 360.0)
    albedo = 0.18 + 0.04 * cloud

    saturation = 1.0 - np.exp(-ghi / 500.0)
    cell_temp = temp + ghi / 800.0 * 20.0
    derate = 1.0 - 0.004 * np.maximum(cell_temp - 25.0, 0.0)
    power = params.capacity_kw * (saturation * derate + params.power_noise * rng.standard_normal(n))
    power = np.where(ghi > 0.0, np.clip(power, 0.0, params.capacity_kw), 0.0)

    channels = {
        "ghi": ghi, "dni": dni, "dhi": dhi, "temp": temp, "pressure": pressure, "rh": rh,
        "dew_point": dew_point, "wind_dir": wind_dir, "wind_speed": wind_speed, "albedo": albedo,
        POWER_CHANNEL: power,
    }
    frame = TimeSeriesFrame(timestamps, channels, {k: DEFAULT_UNITS[k] for k in channels},
                            step=pd.Timedelta(step))
    logger.debug("Generated domain", extra={"name": params.name, "rows": n, "seed": params.seed,
                                            "night_fraction": float(np.mean(power == 0.0))})
    return frame


def shifted_params(base: ClimateParams, shift: float) -> ClimateParams:
    """
    A target climate moved away from ``base`` by ``shift``.

    Cloudiness, temperature mean and seasonality grow and the clear-sky peak
    drops in proportion to ``shift``; the seed always differs from the base.

    Raises:
        ValidationError: If shift < 0
    """
    if shift < 0:
        raise ValidationError(f"shift must be >= 0, got {shift}")
    return replace(
        base,
        name=f"{base.name}-shift{shift:g}",
        cloudiness=float(np.clip(base.cloudiness + 0.25 * shift, 0.0, 1.0)),
        temp_mean=base.temp_mean + 8.0 * shift,
        seasonality=float(np.clip(base.seasonality + 0.3 * shift, 0.0, 1.0)),
        peak_ghi=base.peak_ghi * max(1.0 - 0.3 * shift, 0.0),
        seed=base.seed + 1,
    )


def make_domain_pair(base: ClimateParams, shift: float, n_days: int = 365,
                     step: StepLike = DEFAULT_STEP) -> Tuple[TimeSeriesFrame, TimeSeriesFrame]:
    """(source frame from ``base``, target frame from ``shifted_params(base, shift)``)."""
    target = shifted_params(base, shift)
    logger.info("Generating domain pair", extra={"source": base.name, "target": target.name,
                                                 "shift": shift, "n_days": n_days})
    return generate_domain(base, n_days, step), generate_domain(target, n_days, step)


def with_noise_channels(frame: TimeSeriesFrame, n_channels: int, seed: int = 0,
                        prefix: str = "noise") -> TimeSeriesFrame:
    """Append ``n_channels`` standard-normal channels that carry no signal."""
    rng = np.random.default_rng(seed)
    channels = dict(frame.channels)
    units = dict(frame.units)
    for i in range(n_channels):
        name = f"{prefix}_{i}"
        channels[name] = rng.standard_normal(len(frame))
        units[name] = "1"
    return TimeSeriesFrame(frame.timestamps, channels, units, frame.step)


def default_schema(kind: str) -> ChannelSchema:
    """
    Schema matching the CSV files :func:`write_domain_csv` emits.

    Raises:
        ValidationError: If kind is not ``weather`` or ``solar``
    """
    if kind == "weather":
        return ChannelSchema(WEATHER_TIME_HEADER, dict(WEATHER_HEADERS),
                             {c: DEFAULT_UNITS[c] for c in WEATHER_HEADERS.values()})
    if kind == "solar":
        return ChannelSchema(SOLAR_TIME_HEADER, dict(SOLAR_HEADERS), {POWER_CHANNEL: "kW"})
    raise ValidationError(f"schema kind must be 'weather' or 'solar', got {kind!r}")


def _substep_profile(k: int) -> np.ndarray:
    # zero-sum ramp: the window mean reproduces the coarse value
    return 0.1 * (np.arange(k) - (k - 1) / 2.0) / k


def _write_csv(df: pd.DataFrame, path: str) -> None:
    df.to_csv(path, index=False, float_format="%.6f", date_format="%Y-%m-%d %H:%M", lineterminator="\n")


def write_domain_csv(frame: TimeSeriesFrame, directory: str, domain_id: str,
                     solar_step: Optional[StepLike] = SOLAR_STEP) -> Dict[str, str]:
    """
    Export a generated frame the way real plant data arrives.

    Weather channels go to ``<domain_id>_weather.csv`` at the frame's step.
    Power goes to ``<domain_id>_solar.csv`` at the finer ``solar_step``; the
    sub-step values vary around each coarse value and average back to it, so
    ingesting and resampling the solar file restores the frame's power.
    ``weather_schema.json`` and ``solar_schema.json`` are written alongside.

    Returns:
        Paths keyed ``weather``, ``solar``, ``weather_schema``, ``solar_schema``

    Raises:
        ValidationError: If the frame has no power channel, or solar_step does
            not divide the frame step
    """
    if POWER_CHANNEL not in frame.channels:
        raise ValidationError(f"frame has no {POWER_CHANNEL!r} channel")
    step = frame.step
    fine = pd.Timedelta(solar_step) if solar_step is not None else step
    if fine.value <= 0 or step.value % fine.value != 0:
        raise ValidationError(f"solar step {fine} does not divide the frame step {step}")
    k = step.value // fine.value
    os.makedirs(directory, exist_ok=True)

    stamps = frame.timestamps.tz_convert("UTC").tz_localize(None)
    weather = pd.DataFrame({WEATHER_TIME_HEADER: stamps})
    for header, channel in WEATHER_HEADERS.items():
        weather[header] = frame.column(channel)

    profile = _substep_profile(k) if k > 1 else np.zeros(1)
    offsets = np.arange(k) * fine.value
    fine_stamps = pd.to_datetime((stamps.asi8[:, None] + offsets[None, :]).reshape(-1))
    power = (frame.column(POWER_CHANNEL)[:, None] * (1.0 + profile[None, :])).reshape(-1)
    solar = pd.DataFrame({SOLAR_TIME_HEADER: fine_stamps, "Power(kW)": power})

    paths = {
        "weather": os.path.join(directory, f"{domain_id}_weather.csv"),
        "solar": os.path.join(directory, f"{domain_id}_solar.csv"),
        "weather_schema": os.path.join(directory, "weather_schema.json"),
        "solar_schema": os.path.join(directory, "solar_schema.json"),
    }
    _write_csv(weather, paths["weather"])
    _write_csv(solar, paths["solar"])
    for kind in ("weather", "solar"):
        with open(paths[f"{kind}_schema"], "w", encoding="utf-8") as fh:
            json.dump(default_schema(kind).to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
    logger.info("Wrote synthetic domain files", extra={"domain_id": domain_id, "rows": len(frame),
                                                       "solar_rows": len(solar), **paths})
    return paths
