"""
Time Series Frames
==================

Immutable, timestamped containers for weather and solar channels, together
with the ingestion, resampling and alignment steps that turn raw CSV exports
into one joined frame per location.

Frames sit on a uniform grid of ``step``; rows may be missing from the grid
(after a join or a dropped window) but never off it.

Example:
    >>> weather = ingest_csv("ca_weather.csv", load_schema("weather_schema.json"))
    >>> solar = resample_mean(ingest_csv("ca_solar.csv", load_schema("solar_schema.json")), "30min")
    >>> joined, report = align_join(weather, solar)
"""

import os
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .schema import ChannelSchema, CANONICAL_CHANNELS, POWER_CHANNEL
from ..exceptions import IngestionError, ResamplingError, AlignmentError, ValidationError
from ..logging import get_logger

logger = get_logger("helios.data.frame")

StepLike = Union[str, pd.Timedelta, np.timedelta64]

_MISSING_TOKENS = {"", "nan", "na", "n/a", "null", "none"}


def _ordered(names) -> list:
    canonical = [c for c in CANONICAL_CHANNELS if c in names]
    return canonical + sorted(n for n in names if n not in CANONICAL_CHANNELS)


@dataclass(frozen=True, eq=False)
class TimeSeriesFrame:
    """Timestamped rows of named numeric channels.

    Attributes:
        timestamps: strictly increasing UTC instants
        channels: channel name -> float64 array, one value per timestamp
        units: channel name -> unit string
        step: native grid spacing (None for frames of a single row)
    """

    timestamps: pd.DatetimeIndex
    channels: Mapping[str, np.ndarray]
    units: Mapping[str, str]
    step: Optional[pd.Timedelta] = None

    def __post_init__(self):
        ts = pd.DatetimeIndex(self.timestamps)
        if ts.tz is None:
            ts = ts.tz_localize("UTC")
        else:
            ts = ts.tz_convert("UTC")
        object.__setattr__(self, "timestamps", ts)

        frozen = {}
        for name in _ordered(self.channels):
            values = np.array(self.channels[name], dtype=np.float64)
            if values.ndim != 1 or len(values) != len(ts):
                raise ValidationError(
                    f"channel {name!r} has {values.size} values for {len(ts)} timestamps"
                )
            values.setflags(write=False)
            frozen[name] = values
        object.__setattr__(self, "channels", frozen)
        object.__setattr__(self, "units", {k: self.units.get(k, "") for k in frozen})

        nanos = ts.asi8
        diffs = np.diff(nanos)
        if np.any(diffs <= 0):
            raise ValidationError("timestamps must be strictly increasing")
        step = self.step
        if step is None and len(diffs):
            step = pd.Timedelta(int(diffs.min()), unit="ns")
        if step is not None:
            step = pd.Timedelta(step)
            if step.value <= 0:
                raise ValidationError(f"step must be positive, got {step}")
            if len(diffs) and np.any(diffs % step.value != 0):
                raise ValidationError(f"timestamps are not on a uniform {step} grid")
        object.__setattr__(self, "step", step)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def channel_names(self) -> Tuple[str, ...]:
        return tuple(self.channels)

    def column(self, name: str) -> np.ndarray:
        if name not in self.channels:
            raise ValidationError(f"frame has no channel {name!r}; available: {list(self.channels)}")
        return self.channels[name]

    def matrix(self, names) -> np.ndarray:
        """Stack the named channels as columns of a [n_rows x len(names)] matrix."""
        return np.column_stack([self.column(n) for n in names]) if names else np.empty((len(self), 0))

    def slice_rows(self, start: int, stop: int) -> 'TimeSeriesFrame':
        return self.take(np.arange(start, stop))

    def take(self, index: np.ndarray) -> 'TimeSeriesFrame':
        """Rows at ``index`` (or a boolean mask), keeping the native step."""
        return TimeSeriesFrame(
            timestamps=self.timestamps[index],
            channels={k: v[index] for k, v in self.channels.items()},
            units=self.units,
            step=self.step,
        )

    def select(self, names) -> 'TimeSeriesFrame':
        return TimeSeriesFrame(self.timestamps, {n: self.column(n) for n in names},
                               self.units, self.step)

    def to_frame(self) -> pd.DataFrame:
        """pandas view with a ``timestamp`` index."""
        df = pd.DataFrame({k: v for k, v in self.channels.items()}, index=self.timestamps)
        df.index.name = "timestamp"
        return df

    @classmethod
    def from_frame(cls, df: pd.DataFrame, units: Optional[Mapping[str, str]] = None,
                   step: Optional[StepLike] = None) -> 'TimeSeriesFrame':
        """Build a frame from a DataFrame indexed by timestamps; rows are sorted."""
        df = df.sort_index(kind="mergesort")
        return cls(
            timestamps=pd.DatetimeIndex(df.index),
            channels={c: df[c].to_numpy(dtype=np.float64) for c in df.columns},
            units=dict(units or {}),
            step=pd.Timedelta(step) if step is not None else None,
        )


@dataclass(frozen=True)
class JoinReport:
    """Row accounting for :func:`align_join`."""

    n_rows: int
    dropped_weather: int
    dropped_solar: int

    @property
    def dropped(self) -> int:
        return self.dropped_weather + self.dropped_solar

    def to_dict(self) -> Dict[str, int]:
        return {
            "n_rows": self.n_rows,
            "dropped_weather": self.dropped_weather,
            "dropped_solar": self.dropped_solar,
            "dropped": self.dropped,
        }


def _parse_timestamps(raw: pd.Series, timezone: str) -> pd.Series:
    parsed = pd.to_datetime(raw, format="ISO8601", errors="coerce")
    if parsed.isna().any():
        fallback = pd.to_datetime(raw, format="%Y-%m-%d %H:%M", errors="coerce")
        parsed = parsed.fillna(fallback)
    if parsed.dt.tz is None:
        parsed = parsed.dt.tz_localize(timezone)
    return parsed.dt.tz_convert("UTC")


def ingest_csv(path: str, schema: ChannelSchema) -> TimeSeriesFrame:
    """
    Read a weather or solar CSV file into a frame.

    Empty cells and NA tokens become NaN; any other non-numeric value is an error.

    Args:
        path: CSV file with a header row
        schema: header -> channel mapping

    Returns:
        TimeSeriesFrame sorted by timestamp

    Raises:
        IngestionError: On a missing file or column, a malformed row (with its line
            number) or a duplicate timestamp
    """
    if not os.path.isfile(path):
        raise IngestionError(f"File not found: {path}")

    logger.info(f"Reading CSV file: {path}")
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as e:
        raise IngestionError(f"{path}: {e}")
    except pd.errors.EmptyDataError:
        raise IngestionError(f"{path}: file is empty")

    required = [schema.timestamp] + list(schema.channels)
    missing = [c for c in required if c not in raw.columns]
    if missing:
        raise IngestionError(f"{path}: missing mapped column(s) {missing}")
    if raw.empty:
        raise IngestionError(f"{path}: no data rows")

    stamps = raw[schema.timestamp].fillna("").str.strip()
    try:
        parsed = _parse_timestamps(stamps, schema.timezone)
    except (ValueError, TypeError) as e:
        raise IngestionError(f"{path}: cannot parse timestamps: {e}")
    bad = np.flatnonzero(parsed.isna().to_numpy())
    if len(bad):
        row = int(bad[0])
        # header is line 1
        raise IngestionError(f"unparseable timestamp {stamps.iloc[row]!r}", line=row + 2)

    channels: Dict[str, np.ndarray] = {}
    for header, name in schema.channels.items():
        text = raw[header].fillna("").str.strip()
        values = pd.to_numeric(text, errors="coerce")
        is_missing = text.str.lower().isin(_MISSING_TOKENS)
        malformed = np.flatnonzero((values.isna() & ~is_missing).to_numpy())
        if len(malformed):
            row = int(malformed[0])
            raise IngestionError(
                f"non-numeric value {text.iloc[row]!r} in column {header!r}", line=row + 2
            )
        channels[name] = values.to_numpy(dtype=np.float64)

    dup = parsed.duplicated(keep="first").to_numpy()
    if dup.any():
        row = int(np.flatnonzero(dup)[0])
        raise IngestionError(f"duplicate timestamp {stamps.iloc[row]!r}", line=row + 2)

    order = np.argsort(parsed.to_numpy(), kind="mergesort")
    frame = TimeSeriesFrame(
        timestamps=pd.DatetimeIndex(parsed.iloc[order]),
        channels={k: v[order] for k, v in channels.items()},
        units={name: schema.unit_of(name) for name in channels},
    )
    logger.info("Ingested frame", extra={
        "path": path, "rows": len(frame), "channels": list(frame.channel_names),
        "step": str(frame.step),
    })
    return frame


def resample_mean(frame: TimeSeriesFrame, target_step: StepLike) -> TimeSeriesFrame:
    """
    Average a frame onto a coarser grid.

    Windows are anchored to the epoch, so a 30-minute target yields windows
    starting at :00 and :30. Each output value is the mean of the
    k = target_step / native_step input values of its window and is stamped with
    the window start. Windows with fewer than k rows are dropped with a warning.

    Raises:
        ResamplingError: If target_step is not an integer multiple of the native
            step, or a window contains NaN
    """
    target = pd.Timedelta(target_step)
    native = frame.step
    if native is None:
        raise ResamplingError("cannot resample a frame without a native step")
    if target.value % native.value != 0:
        raise ResamplingError(f"target step {target} is not an integer multiple of {native}")
    k = target.value // native.value
    if k == 1:
        return frame

    window = frame.timestamps.asi8 // target.value
    ids, inverse, counts = np.unique(window, return_inverse=True, return_counts=True)
    complete = counts == k

    means: Dict[str, np.ndarray] = {}
    for name, values in frame.channels.items():
        nan_windows = np.unique(inverse[np.isnan(values)])
        if len(nan_windows):
            start = pd.Timestamp(int(ids[nan_windows[0]]) * target.value, tz="UTC")
            raise ResamplingError(f"channel {name!r} has NaN in the window starting {start}")
        sums = np.bincount(inverse, weights=values, minlength=len(ids))
        means[name] = sums[complete] / k

    n_partial = int((~complete).sum())
    if n_partial:
        logger.warning("Dropped incomplete resampling windows", extra={"count": n_partial})

    return TimeSeriesFrame(
        timestamps=pd.to_datetime(ids[complete] * target.value, utc=True),
        channels=means,
        units=frame.units,
        step=target,
    )


def align_join(weather: TimeSeriesFrame, solar: TimeSeriesFrame,
               solar_channel: str = POWER_CHANNEL) -> Tuple[TimeSeriesFrame, JoinReport]:
    """
    Inner-join weather channels with the solar channel on timestamps.

    Returns:
        (joined frame, JoinReport with the number of rows dropped from each side)

    Raises:
        AlignmentError: If the steps differ, the solar channel is missing, or no
            timestamps overlap
    """
    if weather.step is not None and solar.step is not None and weather.step != solar.step:
        raise AlignmentError(f"step mismatch: weather {weather.step} vs solar {solar.step}")
    if solar_channel not in solar.channels:
        raise AlignmentError(f"solar frame has no {solar_channel!r} channel")

    common, w_idx, s_idx = np.intersect1d(
        weather.timestamps.asi8, solar.timestamps.asi8, assume_unique=True, return_indices=True
    )
    if len(common) == 0:
        raise AlignmentError("weather and solar frames share no timestamps")

    channels = {k: v[w_idx] for k, v in weather.channels.items() if k != solar_channel}
    channels[solar_channel] = solar.channels[solar_channel][s_idx]
    units = dict(weather.units)
    units[solar_channel] = solar.units.get(solar_channel, "kW")

    joined = TimeSeriesFrame(
        timestamps=pd.to_datetime(common, utc=True),
        channels=channels,
        units=units,
        step=weather.step or solar.step,
    )
    report = JoinReport(
        n_rows=len(common),
        dropped_weather=len(weather) - len(common),
        dropped_solar=len(solar) - len(common),
    )
    logger.info("Aligned weather and solar frames", extra=report.to_dict())
    return joined, report


def drop_missing(frame: TimeSeriesFrame) -> Tuple[TimeSeriesFrame, int]:
    """Drop rows with NaN in any channel; returns (frame, number of rows dropped)."""
    if not frame.channels:
        return frame, 0
    bad = np.zeros(len(frame), dtype=bool)
    for values in frame.channels.values():
        bad |= np.isnan(values)
    n_bad = int(bad.sum())
    if n_bad:
        logger.warning("Dropped rows with missing values", extra={"count": n_bad})
        frame = frame.take(~bad)
    return frame, n_bad
