"""
Camera-projector-grating rig.

Classes:
    - Rig: Camera and projector pinhole models plus the grating

Functions:
    - propagation_distance(): Projector-center distance of a pixel's scene point
    - load_rig() / save_rig(): JSON rig files
    - desk_rig() / prototype_rig(): Built-in rigs
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from optics.grating import GratingModel
from optics.pinhole import PinholeModel
from utils.error_types import ConfigError, DomainError
from utils.persistence import read_json, write_json

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Rig:
    """
    Attributes:
        camera: Camera model (its frame is usually the world frame)
        projector: Projector model
        grating: Grating mounted in front of the projector
        name: Label used in manifests
    """
    camera: PinholeModel
    projector: PinholeModel
    grating: GratingModel
    name: str = "rig"

    def __post_init__(self):
        if self.baseline <= 0:
            raise DomainError("camera and projector centers must be distinct")

    @property
    def baseline(self) -> float:
        return float(np.linalg.norm(self.camera.center - self.projector.center))

    @property
    def projector_center(self) -> np.ndarray:
        return self.projector.center

    def conventional(self) -> "Rig":
        """Same rig without first orders (a grating-free projector)."""
        return replace(self, grating=replace(self.grating, orders=(0,)),
                       name=f"{self.name}-conventional")

    def with_orders(self, orders: Optional[Sequence[int]]) -> "Rig":
        if orders is None:
            return self
        return replace(self, grating=replace(self.grating, orders=tuple(orders) + (0,)))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "camera": self.camera.to_dict(),
            "projector": self.projector.to_dict(),
            "grating": self.grating.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Rig":
        try:
            return cls(
                camera=PinholeModel.from_dict(data["camera"]),
                projector=PinholeModel.from_dict(data["projector"]),
                grating=GratingModel.from_dict(data.get("grating", {})),
                name=str(data.get("name", "rig")),
            )
        except KeyError as e:
            raise ConfigError(f"rig description lacks {e}")


def propagation_distance(p: np.ndarray, z: np.ndarray, rig: Rig) -> np.ndarray:
    """
    Distance d(p) from the projector center to the scene point seen at pixel p.

    Args:
        p: Camera pixel(s), shape (..., 2)
        z: Depth(s) in mm
        rig: The rig

    Returns:
        Distance(s) in mm
    """
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0):
        raise DomainError("depth must be positive")
    points = rig.camera.unproject_many(np.asarray(p, dtype=np.float64), z)
    return np.linalg.norm(points - rig.projector_center, axis=-1)


def load_rig(path: str) -> Rig:
    rig = Rig.from_dict(read_json(path))
    log.debug("Loaded rig '%s' (baseline %.1f mm)", rig.name, rig.baseline)
    return rig


def save_rig(rig: Rig, path: str) -> None:
    write_json(path, rig.to_dict())


def _projector_pose(baseline_mm: float) -> np.ndarray:
    # projector center sits at world x = +baseline with the camera's orientation
    return np.array([-baseline_mm, 0.0, 0.0])


def desk_rig(groove_density_lines_per_mm: float = 400.0) -> Rig:
    """
    64x64 camera beside a 640x480 projector.

    The projector focal length is four times the camera's and both principal
    points are aligned to the pixel lattice, so fronto-parallel planes at
    depths where 1e5 / z is an integer decode to exact projector columns.
    """
    camera = PinholeModel(fx=250.0, fy=250.0, cx=31.5, cy=31.5, width=64, height=64)
    projector = PinholeModel(fx=1000.0, fy=1000.0, cx=445.0, cy=240.0, width=640, height=480,
                             translation=_projector_pose(100.0))
    grating = GratingModel(groove_density=groove_density_lines_per_mm * 1e-6)
    return Rig(camera, projector, grating, name="desk")


def prototype_rig(groove_density_lines_per_mm: float = 400.0) -> Rig:
    """384x288 camera, 640x720 projector, 200 mm baseline."""
    camera = PinholeModel(fx=1536.0, fy=1536.0, cx=191.5, cy=143.5, width=384, height=288)
    projector = PinholeModel(fx=1000.0, fy=1000.0, cx=570.0, cy=360.0, width=640, height=720,
                             translation=_projector_pose(200.0))
    grating = GratingModel(groove_density=groove_density_lines_per_mm * 1e-6)
    return Rig(camera, projector, grating, name="prototype")


BUILTIN_RIGS = {"desk": desk_rig, "prototype": prototype_rig}


def resolve_rig(reference: str) -> Rig:
    """Accepts a built-in name (`builtin:desk`) or a JSON path."""
    if reference.startswith("builtin:"):
        name = reference.split(":", 1)[1]
        if name not in BUILTIN_RIGS:
            raise ConfigError(f"unknown built-in rig '{name}'; choose from {sorted(BUILTIN_RIGS)}")
        return BUILTIN_RIGS[name]()
    return load_rig(reference)
