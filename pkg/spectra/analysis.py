"""
Spectral Analysis

Functions:
    - emitted_radiance(): Projector radiance L for one pattern value
    - decoding_margin(): Worst-case on/off intensities under binary patterns
    - fwhm(): Full width at half maximum of a spectral peak
    - smoothness(): Squared first-difference energy ‖∇_λ x‖²
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from spectra.curves import EfficiencySet, ResponseSet
from spectra.grid import SpectralCurve
from utils.error_types import DomainError, UndefinedMetricError


def emitted_radiance(pattern_value: Sequence[float], responses: ResponseSet,
                     wavelength_nm: float) -> float:
    """
    L = Σ_c Ω^proj_c(λ) · P(c).

    Args:
        pattern_value: RGB pattern intensity, components in [0, 1]
        responses: Response set providing the projector emission
        wavelength_nm: Wavelength (interpolated between grid samples)
    """
    p = np.asarray(pattern_value, dtype=np.float64)
    if p.shape != (3,):
        raise DomainError("pattern value must be an RGB triple")
    if np.any(p < 0) or np.any(p > 1):
        raise DomainError("pattern values must lie in [0, 1]")
    emission = np.array([c.at(wavelength_nm) for c in responses.proj])
    return float(emission @ p)


@dataclass(frozen=True)
class DecodingMargin:
    """Per-channel minimum on-intensity and maximum off-intensity."""
    on_min: np.ndarray
    off_max: np.ndarray

    @property
    def margin(self) -> np.ndarray:
        return self.on_min - self.off_max

    @property
    def safe(self) -> bool:
        return bool(np.all(self.margin > 0))


def decoding_margin(H: Union[SpectralCurve, np.ndarray], responses: ResponseSet,
                    eta: EfficiencySet) -> DecodingMargin:
    """
    Binary decoding is safe when a lit pixel under zero order alone is
    brighter than an unlit pixel receiving every first order.

    Accepts one curve or an (n, N) array of reflectances; the returned
    arrays then have shape (n, 3).
    """
    values = H.values if isinstance(H, SpectralCurve) else np.asarray(H, dtype=np.float64)
    if values.shape[-1] != responses.grid.count or eta.grid.count != responses.grid.count:
        raise DomainError("curves must share the grid")
    white = responses.proj_total
    on_weight = responses.cam_matrix * (eta.values(0) * white)
    off_weight = responses.cam_matrix * (eta.first_order_sum() * white)
    return DecodingMargin(values @ on_weight.T, values @ off_weight.T)


def fwhm(curve: Union[SpectralCurve, np.ndarray], wavelengths: np.ndarray = None) -> float:
    """
    Full width at half maximum, scanning outward from the global peak.

    Crossings are linearly interpolated between samples. A side that never
    drops to half maximum ends at the grid boundary.

    Raises:
        UndefinedMetricError: Curve has no positive maximum
    """
    if isinstance(curve, SpectralCurve):
        values, wavelengths = curve.values, curve.wavelengths
    else:
        values = np.asarray(curve, dtype=np.float64)
        if wavelengths is None:
            raise DomainError("wavelengths are required for raw arrays")
    peak = int(np.argmax(values))
    top = values[peak]
    if not np.isfinite(top) or top <= 0:
        raise UndefinedMetricError("fwhm is undefined for a curve without a positive peak")
    half = 0.5 * top

    left = wavelengths[0]
    for i in range(peak - 1, -1, -1):
        if values[i] <= half:
            frac = (half - values[i]) / (values[i + 1] - values[i])
            left = wavelengths[i] + frac * (wavelengths[i + 1] - wavelengths[i])
            break

    right = wavelengths[-1]
    for i in range(peak + 1, len(values)):
        if values[i] <= half:
            frac = (values[i - 1] - half) / (values[i - 1] - values[i])
            right = wavelengths[i - 1] + frac * (wavelengths[i] - wavelengths[i - 1])
            break
    return float(right - left)


def smoothness(values: np.ndarray) -> np.ndarray:
    """‖∇_λ x‖² along the last axis."""
    return np.sum(np.diff(np.asarray(values, dtype=np.float64), axis=-1) ** 2, axis=-1)
