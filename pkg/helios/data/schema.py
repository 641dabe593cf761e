"""
Channel Schema for CSV Ingestion
================================

A schema maps the headers of a weather or solar CSV file onto the canonical
channel names used throughout helios, names the timestamp column, and fixes
the timezone used for naive timestamps.

Example schema file::

    {
        "timestamp": "Local Time",
        "timezone": "UTC",
        "channels": {"GHI": "ghi", "DNI": "dni", "Temperature": "temp"},
        "units": {"temp": "degC"}
    }
"""

import json
import os
from dataclasses import dataclass, field
from typing import Dict, Any

from ..exceptions import ConfigurationError

POWER_CHANNEL = "power_kw"

# Canonical channel order; feature matrices follow it.
CANONICAL_CHANNELS = (
    "ghi", "dni", "dhi", "temp", "pressure", "rh",
    "dew_point", "wind_dir", "wind_speed", "albedo", POWER_CHANNEL,
)

DEFAULT_UNITS = {
    "ghi": "W/m2",
    "dni": "W/m2",
    "dhi": "W/m2",
    "temp": "degC",
    "pressure": "hPa",
    "rh": "%",
    "dew_point": "degC",
    "wind_dir": "deg",
    "wind_speed": "m/s",
    "albedo": "1",
    POWER_CHANNEL: "kW",
}


@dataclass
class ChannelSchema:
    """Mapping of CSV headers onto canonical channels."""

    timestamp: str
    channels: Dict[str, str]
    units: Dict[str, str] = field(default_factory=dict)
    timezone: str = "UTC"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Validate the schema.

        Raises:
            ConfigurationError: If the timestamp column or channel mapping is missing,
                or two headers map onto the same channel
        """
        if not self.timestamp:
            raise ConfigurationError("schema must name a timestamp column")
        if not self.channels:
            raise ConfigurationError("schema must map at least one channel column")
        targets = list(self.channels.values())
        duplicates = sorted({t for t in targets if targets.count(t) > 1})
        if duplicates:
            raise ConfigurationError(f"schema maps several columns onto {duplicates}")
        if self.timestamp in self.channels:
            raise ConfigurationError("timestamp column cannot also be a channel")

    def unit_of(self, channel: str) -> str:
        return self.units.get(channel, DEFAULT_UNITS.get(channel, ""))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "timestamp": self.timestamp,
            "timezone": self.timezone,
            "channels": dict(self.channels),
            "units": dict(self.units),
        }

    @classmethod
    def from_dict(cls, config: dict) -> 'ChannelSchema':
        """
        Create a schema from a dictionary.

        Raises:
            ConfigurationError: If required keys are missing or malformed
        """
        try:
            return cls(
                timestamp=config['timestamp'],
                channels=dict(config['channels']),
                units=dict(config.get('units', {})),
                timezone=config.get('timezone', 'UTC'),
            )
        except KeyError as e:
            raise ConfigurationError(f"Missing required schema value: {str(e)}")
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid schema value: {str(e)}")


def load_schema(path: str) -> ChannelSchema:
    """Read a JSON schema file.

    Raises:
        ConfigurationError: If the file is missing or not valid JSON
    """
    if not os.path.isfile(path):
        raise ConfigurationError(f"Schema file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Schema file {path} is not valid JSON: {e}")
    return ChannelSchema.from_dict(payload)
