"""
Spectra package: wavelength axis, spectral curves and spectral metrics.
"""

from spectra.analysis import DecodingMargin, decoding_margin, emitted_radiance, fwhm, smoothness
from spectra.curves import (
    CHANNELS,
    ORDERS,
    EfficiencySet,
    ResponseSet,
    default_efficiency,
    default_responses,
    flat_efficiency,
    flat_responses,
    restrict_orders,
)
from spectra.grid import DEFAULT_GRID, SpectralCurve, WavelengthGrid, resample, resample_values
from spectra.srgb import color_matching_table, to_srgb

__all__ = [
    "WavelengthGrid",
    "SpectralCurve",
    "DEFAULT_GRID",
    "resample",
    "resample_values",
    "EfficiencySet",
    "ResponseSet",
    "ORDERS",
    "CHANNELS",
    "default_responses",
    "default_efficiency",
    "flat_responses",
    "flat_efficiency",
    "restrict_orders",
    "emitted_radiance",
    "decoding_margin",
    "DecodingMargin",
    "fwhm",
    "smoothness",
    "to_srgb",
    "color_matching_table",
]
