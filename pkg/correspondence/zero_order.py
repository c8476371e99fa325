"""
Zero-order correspondence: the grating-free camera-to-projector mapping.
"""

import numpy as np

from optics.rig import Rig
from utils.error_types import DomainError, ProjectionError


def zero_order_many(p: np.ndarray, z: np.ndarray, rig: Rig) -> np.ndarray:
    """
    Projector pixels (column, row) for camera pixels at depth z.

    Entries behind the projector are NaN.
    """
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0):
        raise DomainError("depth must be positive")
    points = rig.camera.unproject_many(np.asarray(p, dtype=np.float64), z)
    return rig.projector.project_many(points)


def zero_order(p, z: float, rig: Rig) -> np.ndarray:
    """
    Projects the scene point behind camera pixel p at depth z into the projector.

    Raises:
        DomainError: z <= 0
        ProjectionError: Point lies at or behind the projector
    """
    q = zero_order_many(np.asarray(p, dtype=np.float64), np.float64(z), rig)
    if not np.all(np.isfinite(q)):
        raise ProjectionError(f"pixel {tuple(p)} at {z} mm is behind the projector")
    return q
