"""
Spectral Curve Sets

Classes:
    - EfficiencySet: Diffraction efficiency per order
    - ResponseSet: Camera response and projector emission per RGB channel

Functions:
    - default_responses(): Synthetic three-bump camera/projector curves
    - flat_responses(): Constant curves (handy for closed-form checks)
    - default_efficiency(): Flat zero order, ramped first orders
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from spectra.grid import DEFAULT_GRID, SpectralCurve, WavelengthGrid, resample
from utils.error_types import DomainError

ORDERS = (-1, 0, 1)
CHANNELS = ("r", "g", "b")


@dataclass(frozen=True)
class EfficiencySet:
    """
    Diffraction efficiency η_m(λ) for orders m in {-1, 0, 1}.

    Calibrated sets are zero-order normalized (η_0 = 1). Orders missing
    from `eta` are treated as uncalibrated and contribute no light.
    """
    eta: Mapping[int, SpectralCurve]
    uncalibrated: Tuple[int, ...] = ()

    def __post_init__(self):
        if 0 not in self.eta:
            raise DomainError("efficiency set needs the zero order")
        grids = {curve.grid for curve in self.eta.values()}
        if len(grids) != 1:
            raise DomainError("efficiency curves must share one grid")
        for m, curve in self.eta.items():
            if m not in ORDERS:
                raise DomainError(f"unsupported diffraction order {m}")
            if np.any(curve.values < 0) or np.any(curve.values > 1.5):
                raise DomainError(f"efficiency of order {m} outside [0, 1.5]")
        object.__setattr__(self, "eta", dict(self.eta))

    @property
    def grid(self) -> WavelengthGrid:
        return self.eta[0].grid

    @property
    def orders(self) -> Tuple[int, ...]:
        return tuple(sorted(self.eta))

    def values(self, m: int) -> np.ndarray:
        """η_m sampled on the grid, zeros for absent orders."""
        curve = self.eta.get(m)
        if curve is None:
            return np.zeros(self.grid.count)
        return curve.values

    def first_order_sum(self) -> np.ndarray:
        return self.values(-1) + self.values(1)

    def normalized(self) -> "EfficiencySet":
        """Divides every order by η_0, so η_0 becomes 1."""
        eta0 = self.values(0)
        if np.any(eta0 <= 0):
            raise DomainError("cannot normalize: zero-order efficiency vanishes")
        eta = {m: SpectralCurve(self.grid, c.values / eta0, True) for m, c in self.eta.items()}
        return EfficiencySet(eta, self.uncalibrated)

    def on_grid(self, grid: WavelengthGrid) -> "EfficiencySet":
        return EfficiencySet({m: resample(c, grid) for m, c in self.eta.items()}, self.uncalibrated)


@dataclass(frozen=True)
class ResponseSet:
    """
    Camera response Ω^cam and projector emission Ω^proj, one curve per channel.

    Attributes:
        cam: (R, G, B) camera response curves
        proj: (R, G, B) projector emission curves
    """
    cam: Tuple[SpectralCurve, SpectralCurve, SpectralCurve]
    proj: Tuple[SpectralCurve, SpectralCurve, SpectralCurve]

    def __post_init__(self):
        if len(self.cam) != 3 or len(self.proj) != 3:
            raise DomainError("response sets need exactly three channels each")
        grids = {c.grid for c in (*self.cam, *self.proj)}
        if len(grids) != 1:
            raise DomainError("response curves must share one grid")
        for curve in (*self.cam, *self.proj):
            if np.any(curve.values < 0):
                raise DomainError("responses must be non-negative")
        for i, curve in enumerate(self.proj):
            if curve.values.sum() <= 0:
                raise DomainError(f"projector emission channel {CHANNELS[i]} integrates to zero")
        object.__setattr__(self, "cam", tuple(self.cam))
        object.__setattr__(self, "proj", tuple(self.proj))

    @property
    def grid(self) -> WavelengthGrid:
        return self.cam[0].grid

    @property
    def cam_matrix(self) -> np.ndarray:
        """3 x N camera response matrix."""
        return np.stack([c.values for c in self.cam])

    @property
    def proj_matrix(self) -> np.ndarray:
        """3 x N projector emission matrix."""
        return np.stack([c.values for c in self.proj])

    @property
    def proj_total(self) -> np.ndarray:
        """Σ_c Ω^proj_c(λ): emission of a white pattern pixel."""
        return self.proj_matrix.sum(axis=0)

    @classmethod
    def from_matrices(cls, grid: WavelengthGrid, cam: np.ndarray, proj: np.ndarray) -> "ResponseSet":
        cam = np.clip(np.asarray(cam, dtype=np.float64), 0.0, None)
        proj = np.clip(np.asarray(proj, dtype=np.float64), 0.0, None)
        return cls(tuple(SpectralCurve(grid, row, True) for row in cam),
                   tuple(SpectralCurve(grid, row, True) for row in proj))

    def on_grid(self, grid: WavelengthGrid) -> "ResponseSet":
        return ResponseSet(tuple(resample(c, grid) for c in self.cam),
                           tuple(resample(c, grid) for c in self.proj))


def _bump(wavelengths: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-0.5 * ((wavelengths - center) / width) ** 2)


def default_responses(grid: WavelengthGrid = DEFAULT_GRID) -> ResponseSet:
    """
    Smooth synthetic curves: three overlapping bumps per device.

    The camera curves are broad with cross-talk. The projector curves are
    narrower, LED-like. A small floor keeps every wavelength observable.
    """
    w = grid.wavelengths
    cam = np.stack([
        _bump(w, 605.0, 38.0) + 0.08 * _bump(w, 530.0, 30.0),
        _bump(w, 535.0, 40.0) + 0.05 * _bump(w, 470.0, 25.0),
        _bump(w, 462.0, 32.0) + 0.04 * _bump(w, 540.0, 30.0),
    ]) + 0.02
    proj = np.stack([
        0.9 * _bump(w, 620.0, 22.0),
        0.8 * _bump(w, 530.0, 30.0),
        1.0 * _bump(w, 455.0, 18.0),
    ]) + 0.01
    return ResponseSet.from_matrices(grid, cam, proj)


def flat_responses(grid: WavelengthGrid = DEFAULT_GRID,
                   cam_value: float = 1.0, proj_value: float = 1.0) -> ResponseSet:
    cam = np.full((3, grid.count), cam_value)
    proj = np.full((3, grid.count), proj_value)
    return ResponseSet.from_matrices(grid, cam, proj)


def default_efficiency(grid: WavelengthGrid = DEFAULT_GRID,
                       eta0: float = 0.5,
                       first_range: Tuple[float, float] = (0.05, 0.2),
                       orders: Iterable[int] = ORDERS) -> EfficiencySet:
    """
    η_0 flat, η_±1 ramped linearly across the grid.

    Args:
        grid: Wavelength grid
        eta0: Zero-order efficiency
        first_range: First-order efficiency at the first and last grid sample
        orders: Orders to include (0 is always included)
    """
    ramp = np.linspace(first_range[0], first_range[1], grid.count)
    eta: Dict[int, SpectralCurve] = {0: SpectralCurve.constant(grid, eta0)}
    for m in orders:
        if m != 0:
            eta[m] = SpectralCurve(grid, ramp, True)
    return EfficiencySet(eta)


def flat_efficiency(grid: WavelengthGrid, eta0: float, eta_first: float,
                    orders: Sequence[int] = ORDERS) -> EfficiencySet:
    eta: Dict[int, SpectralCurve] = {0: SpectralCurve.constant(grid, eta0)}
    for m in orders:
        if m != 0:
            eta[m] = SpectralCurve.constant(grid, eta_first)
    return EfficiencySet(eta)


def restrict_orders(eta: EfficiencySet, orders: Optional[Iterable[int]]) -> EfficiencySet:
    """Keeps only the listed orders (0 always stays)."""
    if orders is None:
        return eta
    keep = set(orders) | {0}
    return EfficiencySet({m: c for m, c in eta.eta.items() if m in keep}, eta.uncalibrated)
