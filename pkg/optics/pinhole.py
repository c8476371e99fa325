"""
Pinhole camera/projector model with optional two-coefficient radial distortion.

Pixel coordinates are (column, row) with integers at pixel centers. The
extrinsics map world points into the model frame: X_m = R·X_w + t.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from utils.error_types import DomainError, ProjectionError

_UNDISTORT_ITERATIONS = 30


@dataclass(frozen=True)
class PinholeModel:
    """
    Attributes:
        fx, fy: Focal lengths in pixels
        cx, cy: Principal point in pixels
        width, height: Resolution in pixels
        rotation: 3x3 world-to-model rotation
        translation: World-to-model translation (mm)
        distortion: Optional radial coefficients (k1, k2)
    """
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3), repr=False)
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3), repr=False)
    distortion: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise DomainError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise DomainError("resolution must be positive")
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        if np.linalg.norm(R.T @ R - np.eye(3)) >= 1e-9:
            raise DomainError("rotation matrix is not orthonormal")
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        if self.distortion is not None:
            k = tuple(float(v) for v in self.distortion)
            object.__setattr__(self, "distortion", k if any(k) else None)

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def center(self) -> np.ndarray:
        """Optical center in world coordinates."""
        return -self.rotation.T @ self.translation

    @property
    def resolution(self) -> Tuple[int, int]:
        return self.width, self.height

    def to_model(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def to_world(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.translation) @ self.rotation

    def _distort(self, xn: np.ndarray, yn: np.ndarray):
        if self.distortion is None:
            return xn, yn
        k1, k2 = self.distortion
        r2 = xn * xn + yn * yn
        factor = 1.0 + k1 * r2 + k2 * r2 * r2
        return xn * factor, yn * factor

    def _undistort(self, xd: np.ndarray, yd: np.ndarray):
        if self.distortion is None:
            return xd, yd
        k1, k2 = self.distortion
        xn, yn = xd.copy(), yd.copy()
        for _ in range(_UNDISTORT_ITERATIONS):
            r2 = xn * xn + yn * yn
            factor = 1.0 + k1 * r2 + k2 * r2 * r2
            xn, yn = xd / factor, yd / factor
        return xn, yn

    def project_model_frame(self, points_model: np.ndarray) -> np.ndarray:
        """Pixels of points (or directions) given in the model frame; NaN where z <= 0."""
        pts = np.asarray(points_model, dtype=np.float64)
        z = pts[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = np.where(z > 0, pts[..., 0] / z, np.nan)
            yn = np.where(z > 0, pts[..., 1] / z, np.nan)
        xd, yd = self._distort(xn, yn)
        return np.stack([self.fx * xd + self.cx, self.fy * yd + self.cy], axis=-1)

    def project_many(self, points_world: np.ndarray) -> np.ndarray:
        return self.project_model_frame(self.to_model(points_world))

    def rays(self, pixels: np.ndarray) -> np.ndarray:
        """Model-frame ray directions with unit z for the given pixels."""
        px = np.asarray(pixels, dtype=np.float64)
        xd = (px[..., 0] - self.cx) / self.fx
        yd = (px[..., 1] - self.cy) / self.fy
        xn, yn = self._undistort(xd, yd)
        return np.stack([xn, yn, np.ones_like(xn)], axis=-1)

    def unproject_many(self, pixels: np.ndarray, depth: np.ndarray) -> np.ndarray:
        """World points at model-frame depth `depth` behind each pixel."""
        depth = np.asarray(depth, dtype=np.float64)
        return self.to_world(self.rays(pixels) * depth[..., None])

    def to_dict(self) -> dict:
        data = {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "resolution": [self.width, self.height],
            "rotation": self.rotation.reshape(-1).tolist(),
            "translation": self.translation.tolist(),
        }
        if self.distortion is not None:
            data["distortion"] = list(self.distortion)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PinholeModel":
        width, height = data["resolution"]
        return cls(
            fx=float(data["fx"]), fy=float(data["fy"]),
            cx=float(data["cx"]), cy=float(data["cy"]),
            width=int(width), height=int(height),
            rotation=np.asarray(data.get("rotation", np.eye(3).reshape(-1)), dtype=np.float64).reshape(3, 3),
            translation=np.asarray(data.get("translation", [0, 0, 0]), dtype=np.float64),
            distortion=tuple(data["distortion"]) if data.get("distortion") else None,
        )


def unproject(p: Sequence[float], z: float, model: PinholeModel) -> np.ndarray:
    """
    Back-projects a pixel to the 3D point at depth z (world frame).

    Raises:
        DomainError: z <= 0
    """
    if z <= 0:
        raise DomainError(f"depth must be positive, got {z}")
    return model.unproject_many(np.asarray(p, dtype=np.float64), np.float64(z))


def project(point: Sequence[float], model: PinholeModel) -> np.ndarray:
    """
    Projects a world point to pixel coordinates.

    Raises:
        ProjectionError: Point at or behind the optical center
    """
    pm = model.to_model(np.asarray(point, dtype=np.float64))
    if pm[2] <= 0:
        raise ProjectionError(f"point {tuple(point)} is not in front of the model")
    return model.project_model_frame(pm)
