# helios - Synthetic weather and solar domains
# MIT License

from helios.synth.climate import ClimateParams, CLIMATE_PRESETS, preset
from helios.synth.generator import (
    generate_domain, shifted_params, make_domain_pair, with_noise_channels,
    write_domain_csv, default_schema, clear_sky_ghi, solar_elevation, day_length_hours,
    WEATHER_HEADERS, SOLAR_HEADERS,
)

__all__ = [
    'ClimateParams', 'CLIMATE_PRESETS', 'preset',
    'generate_domain', 'shifted_params', 'make_domain_pair', 'with_noise_channels',
    'write_domain_csv', 'default_schema', 'clear_sky_ghi', 'solar_elevation', 'day_length_hours',
    'WEATHER_HEADERS', 'SOLAR_HEADERS',
]
