"""
Diffraction grating model.

The grating is a thin transmissive film perpendicular to the projector
optical axis. In the grating frame (the projector frame rotated in-plane by
the grating orientation), order m at wavelength λ shifts the x component of
a unit direction by −m·g·λ and leaves the y component untouched.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from utils.error_types import DomainError, EvanescentOrderError


@dataclass(frozen=True)
class GratingModel:
    """
    Attributes:
        groove_density: Lines per nm, so g·λ is unitless
        offset_mm: Distance of the grating plane from the projector center
        orientation_deg: In-plane rotation of the grating about the optical axis
        orders: Active diffraction orders, always containing 0
    """
    groove_density: float = 4.0e-4
    offset_mm: float = 10.0
    orientation_deg: float = 0.0
    orders: Tuple[int, ...] = (-1, 0, 1)

    def __post_init__(self):
        if self.groove_density <= 0:
            raise DomainError("groove density must be positive")
        if self.offset_mm <= 0:
            raise DomainError("grating offset must be positive")
        orders = tuple(sorted({int(m) for m in self.orders}))
        if 0 not in orders or any(abs(m) > 1 for m in orders):
            raise DomainError("orders must be a subset of {-1, 0, 1} containing 0")
        object.__setattr__(self, "orders", orders)

    @property
    def first_orders(self) -> Tuple[int, ...]:
        return tuple(m for m in self.orders if m != 0)

    @property
    def frame_rotation(self) -> np.ndarray:
        """Rotation taking grating-frame vectors into the projector frame."""
        a = np.deg2rad(self.orientation_deg)
        c, s = np.cos(a), np.sin(a)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def to_dict(self) -> dict:
        return {
            "groove_density_lines_per_mm": self.groove_density * 1e6,
            "offset_mm": self.offset_mm,
            "orientation_deg": self.orientation_deg,
            "orders": list(self.orders),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GratingModel":
        # files store lines/mm; internally lines/nm
        return cls(
            groove_density=float(data.get("groove_density_lines_per_mm", 400.0)) * 1e-6,
            offset_mm=float(data.get("offset_mm", 10.0)),
            orientation_deg=float(data.get("orientation_deg", 0.0)),
            orders=tuple(data.get("orders", (-1, 0, 1))),
        )


def diffract(v: np.ndarray, m: int, wavelength_nm: float, g: float) -> np.ndarray:
    """
    Applies the grating equation to a unit direction.

    Args:
        v: Unit incident direction(s) with positive z, shape (..., 3)
        m: Diffraction order
        wavelength_nm: Wavelength
        g: Groove density in lines/nm

    Returns:
        Unit outgoing direction(s)

    Raises:
        EvanescentOrderError: The shifted direction leaves the unit disk
    """
    v = np.asarray(v, dtype=np.float64)
    if np.any(np.abs(np.linalg.norm(v, axis=-1) - 1.0) > 1e-9) or np.any(v[..., 2] <= 0):
        raise DomainError("incident direction must be unit length with positive z")
    dx = v[..., 0] - m * g * wavelength_nm
    dy = v[..., 1]
    radial = dx * dx + dy * dy
    if np.any(radial > 1.0):
        raise EvanescentOrderError(f"order {m} at {wavelength_nm} nm does not propagate")
    return np.stack([dx, dy, np.sqrt(1.0 - radial)], axis=-1)
