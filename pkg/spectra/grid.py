"""
Wavelength Grid and Spectral Curves

Classes:
    - WavelengthGrid: Evenly spaced ascending wavelength axis (nm)
    - SpectralCurve: Values sampled on a WavelengthGrid

Functions:
    - resample(): Linear interpolation of a curve onto another grid
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.interpolate import interp1d

from utils.error_types import DomainError, SpectralRangeError


@dataclass(frozen=True)
class WavelengthGrid:
    """
    Sampled spectrum axis. Endpoints are inclusive.

    Attributes:
        start_nm: First wavelength
        end_nm: Last wavelength
        step_nm: Sample spacing
    """
    start_nm: float = 430.0
    end_nm: float = 660.0
    step_nm: float = 5.0

    def __post_init__(self):
        if self.step_nm <= 0:
            raise DomainError(f"wavelength step must be positive, got {self.step_nm}")
        if self.end_nm < self.start_nm:
            raise DomainError("wavelength grid must be ascending")
        span = (self.end_nm - self.start_nm) / self.step_nm
        if abs(span - round(span)) > 1e-9:
            raise DomainError(
                f"({self.end_nm} - {self.start_nm}) is not a multiple of {self.step_nm}")

    @property
    def count(self) -> int:
        return int(round((self.end_nm - self.start_nm) / self.step_nm)) + 1

    @property
    def wavelengths(self) -> np.ndarray:
        return self.start_nm + self.step_nm * np.arange(self.count, dtype=np.float64)

    def index_of(self, wavelength_nm: float) -> int:
        """Index of the grid sample nearest to `wavelength_nm`."""
        i = int(round((wavelength_nm - self.start_nm) / self.step_nm))
        return min(max(i, 0), self.count - 1)

    def contains(self, wavelength_nm: float) -> bool:
        return self.start_nm - 1e-9 <= wavelength_nm <= self.end_nm + 1e-9

    def to_dict(self) -> dict:
        return {"start_nm": self.start_nm, "end_nm": self.end_nm, "step_nm": self.step_nm}

    @classmethod
    def from_dict(cls, data: dict) -> "WavelengthGrid":
        return cls(float(data.get("start_nm", 430.0)),
                   float(data.get("end_nm", 660.0)),
                   float(data.get("step_nm", 5.0)))

    @classmethod
    def from_wavelengths(cls, wavelengths: Iterable[float]) -> "WavelengthGrid":
        w = np.asarray(list(wavelengths), dtype=np.float64)
        if w.size < 2:
            raise DomainError("need at least two wavelengths to infer a grid")
        steps = np.diff(w)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-6:
            raise DomainError("wavelengths are not evenly spaced and ascending")
        return cls(float(w[0]), float(w[-1]), float(steps[0]))


DEFAULT_GRID = WavelengthGrid()


@dataclass(frozen=True)
class SpectralCurve:
    """
    A function over a wavelength grid.

    Attributes:
        grid: The wavelength axis
        values: One value per grid sample
        non_negative: Enforce values >= 0 (reflectance, efficiency, responses)
    """
    grid: WavelengthGrid
    values: np.ndarray = field(repr=False)
    non_negative: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.size != self.grid.count:
            raise DomainError(
                f"curve has {values.size} samples, grid expects {self.grid.count}")
        if not np.all(np.isfinite(values)):
            raise DomainError("curve values must be finite")
        if self.non_negative and np.any(values < 0):
            raise DomainError("curve values must be non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: WavelengthGrid, value: float, non_negative: bool = True) -> "SpectralCurve":
        return cls(grid, np.full(grid.count, float(value)), non_negative)

    @property
    def wavelengths(self) -> np.ndarray:
        return self.grid.wavelengths

    def at(self, wavelength_nm: float) -> float:
        """Linearly interpolated value, clamped outside the grid."""
        return float(np.interp(wavelength_nm, self.wavelengths, self.values))

    def scaled(self, factor: float) -> "SpectralCurve":
        return SpectralCurve(self.grid, self.values * factor, self.non_negative)

    def __len__(self) -> int:
        return self.grid.count


def resample(curve: SpectralCurve, target: WavelengthGrid) -> SpectralCurve:
    """
    Resamples a curve onto another grid by linear interpolation.

    Values outside the source range take the boundary value.

    Args:
        curve: Source curve
        target: Target grid

    Returns:
        SpectralCurve on `target`

    Raises:
        SpectralRangeError: The grids do not overlap
    """
    if curve.grid == target:
        return curve
    src = curve.grid
    if target.end_nm < src.start_nm or target.start_nm > src.end_nm:
        raise SpectralRangeError(
            f"source {src.start_nm}-{src.end_nm} nm and target "
            f"{target.start_nm}-{target.end_nm} nm are disjoint")
    values = np.interp(target.wavelengths, src.wavelengths, curve.values)
    return SpectralCurve(target, values, curve.non_negative)


def resample_values(values: np.ndarray, source: WavelengthGrid,
                    target: Optional[WavelengthGrid]) -> np.ndarray:
    """Resamples the last axis of an array of spectra."""
    if target is None or source == target:
        return np.asarray(values, dtype=np.float64)
    if target.end_nm < source.start_nm or target.start_nm > source.end_nm:
        raise SpectralRangeError("disjoint wavelength ranges")
    values = np.asarray(values, dtype=np.float64)
    # clamping the query reproduces boundary values outside the source range
    query = np.clip(target.wavelengths, source.start_nm, source.end_nm)
    return interp1d(source.wavelengths, values, axis=-1)(query)
