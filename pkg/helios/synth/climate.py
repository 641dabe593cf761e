"""
Climate parameters for synthetic domains.

Three presets stand in for three climatically distinct plant locations.
"""

from dataclasses import asdict, dataclass, replace
from typing import Any, Dict

from ..exceptions import ConfigurationError


@dataclass
class ClimateParams:
    """Knobs of the synthetic weather and power generator.

    Attributes:
        name: domain id given to generated data
        seasonality: latitude-like amplitude in [0, 1]; scales day-length,
            irradiance and temperature swings over the year
        peak_ghi: clear-sky GHI at solar noon around the equinox (W/m2)
        cloudiness: mean cloud cover in [0, 1]
        temp_mean: annual mean air temperature (degC)
        temp_amplitude: half of the diurnal temperature range (degC)
        wind_speed_mean: mean wind speed (m/s)
        wind_direction: dominant wind direction (deg)
        ghi_noise, temp_noise, wind_noise: measurement noise stddevs
        cloud_noise: stddev of day-to-day cloud cover
        power_noise: power noise stddev as a fraction of capacity
        capacity_kw: plant capacity; power never exceeds it
        seed: generator seed
    """
    name: str = "domain"
    seasonality: float = 0.4
    peak_ghi: float = 1000.0
    cloudiness: float = 0.2
    temp_mean: float = 18.0
    temp_amplitude: float = 7.0
    wind_speed_mean: float = 4.0
    wind_direction: float = 225.0
    ghi_noise: float = 20.0
    temp_noise: float = 0.8
    wind_noise: float = 0.8
    cloud_noise: float = 0.2
    power_noise: float = 0.01
    capacity_kw: float = 4000.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Raises:
            ConfigurationError: If a physical value is negative or a fraction
                leaves [0, 1]
        """
        for name in ("cloudiness", "seasonality"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
        for name in ("peak_ghi", "temp_amplitude", "wind_speed_mean", "ghi_noise", "temp_noise",
                     "wind_noise", "cloud_noise", "power_noise"):
            value = getattr(self, name)
            if value < 0:
                raise ConfigurationError(f"{name} must be non-negative, got {value}")
        if not self.capacity_kw > 0:
            raise ConfigurationError(f"capacity_kw must be positive, got {self.capacity_kw}")
        if not 0.0 <= self.wind_direction < 360.0:
            raise ConfigurationError(f"wind_direction must lie in [0, 360), got {self.wind_direction}")

    def noise_free(self) -> 'ClimateParams':
        return replace(self, ghi_noise=0.0, temp_noise=0.0, wind_noise=0.0, cloud_noise=0.0,
                       power_noise=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, config: dict) -> 'ClimateParams':
        """
        Raises:
            ConfigurationError: On unknown keys or unconvertible values
        """
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(config) - known)
        if unknown:
            raise ConfigurationError(f"Unknown climate parameter(s): {unknown}")
        try:
            values = {k: (str(v) if k == "name" else int(v) if k == "seed" else float(v))
                      for k, v in config.items()}
            return cls(**values)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid climate parameter value: {e}")


CLIMATE_PRESETS: Dict[str, ClimateParams] = {
    "sunny-dry": ClimateParams(
        name="sunny-dry", seasonality=0.35, peak_ghi=1050.0, cloudiness=0.1,
        temp_mean=22.0, temp_amplitude=9.0, wind_speed_mean=3.5, wind_direction=270.0,
        capacity_kw=5000.0, seed=11,
    ),
    "humid-cloudy": ClimateParams(
        name="humid-cloudy", seasonality=0.2, peak_ghi=950.0, cloudiness=0.4,
        temp_mean=26.0, temp_amplitude=5.0, wind_speed_mean=4.5, wind_direction=120.0,
        capacity_kw=3000.0, seed=23,
    ),
    "temperate-seasonal": ClimateParams(
        name="temperate-seasonal", seasonality=0.6, peak_ghi=900.0, cloudiness=0.3,
        temp_mean=12.0, temp_amplitude=7.0, wind_speed_mean=5.0, wind_direction=225.0,
        capacity_kw=4000.0, seed=37,
    ),
}


def preset(name: str) -> ClimateParams:
    """
    Raises:
        ConfigurationError: Unknown preset name
    """
    try:
        return replace(CLIMATE_PRESETS[name])
    except KeyError:
        raise ConfigurationError(f"unknown climate preset {name!r}; choose from "
                                 f"{sorted(CLIMATE_PRESETS)}")
