"""
Ground-truth scenes in camera space.

Classes:
    - Scene: Depth map and reflectance cube per camera pixel

Functions:
    - save_scene() / load_scene(): JSON manifest plus depth PFM and a cube or patch spectra
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from spectra.grid import DEFAULT_GRID, WavelengthGrid, resample_values
from utils.codecs.cube import read_cube, write_cube
from utils.codecs.pfm import read_pfm, write_pfm
from utils.codecs.tables import read_spectra_table, write_spectra_table
from utils.error_types import ConfigError, DomainError
from utils.persistence import read_json, write_json

log = logging.getLogger(__name__)

MAX_REFLECTANCE = 1.5


@dataclass(frozen=True)
class Scene:
    """
    Attributes:
        depth: (H, W) depth in mm, NaN where undefined
        cube: (H, W, N) reflectance on `grid`
        grid: Wavelength grid of the cube
        name: Scene label
        labels: Optional (H, W) patch index map, -1 for background
        patches: Optional named patch spectra, ordered as in `labels`
    """
    depth: np.ndarray = field(repr=False)
    cube: np.ndarray = field(repr=False)
    grid: WavelengthGrid = DEFAULT_GRID
    name: str = "scene"
    labels: Optional[np.ndarray] = field(default=None, repr=False)
    patches: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        depth = np.asarray(self.depth, dtype=np.float64)
        cube = np.asarray(self.cube, dtype=np.float64)
        if depth.ndim != 2 or cube.shape[:2] != depth.shape:
            raise DomainError(f"depth {depth.shape} and cube {cube.shape} disagree")
        if cube.shape[2] != self.grid.count:
            raise DomainError(f"cube has {cube.shape[2]} channels, grid expects {self.grid.count}")
        defined = np.isfinite(depth)
        if np.any(depth[defined] <= 0):
            raise DomainError("scene depth must be positive where defined")
        if not np.all(np.isfinite(cube)) or np.any(cube < 0) or np.any(cube > MAX_REFLECTANCE):
            raise DomainError(f"reflectance must lie in [0, {MAX_REFLECTANCE}]")
        for array in (depth, cube):
            array.setflags(write=False)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "cube", cube)

    @property
    def shape(self):
        return self.depth.shape

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.depth)

    def pixels(self) -> np.ndarray:
        """(H·W, 2) pixel coordinates (column, row) in row-major order."""
        rows, cols = np.mgrid[0:self.shape[0], 0:self.shape[1]]
        return np.stack([cols.ravel(), rows.ravel()], axis=-1).astype(np.float64)

    def with_depth(self, depth: np.ndarray) -> "Scene":
        return Scene(depth, self.cube, self.grid, self.name, self.labels, self.patches)

    def on_grid(self, grid: WavelengthGrid) -> "Scene":
        if grid == self.grid:
            return self
        cube = resample_values(self.cube, self.grid, grid)
        patches = {k: resample_values(v, self.grid, grid) for k, v in self.patches.items()}
        return Scene(self.depth, cube, grid, self.name, self.labels, patches)


def save_scene(scene: Scene, directory: str) -> str:
    """Writes the manifest, depth PFM and cube (or patches) into `directory`."""
    manifest = {
        "name": scene.name,
        "grid": scene.grid.to_dict(),
        "resolution": [scene.shape[1], scene.shape[0]],
        "depth": "depth.pfm",
    }
    write_pfm(os.path.join(directory, "depth.pfm"), np.nan_to_num(scene.depth, nan=0.0))
    if scene.labels is not None and scene.patches:
        write_pfm(os.path.join(directory, "labels.pfm"), scene.labels.astype(np.float32))
        write_spectra_table(os.path.join(directory, "patches.csv"), scene.grid.wavelengths, scene.patches)
        manifest["patches"] = {"labels": "labels.pfm", "spectra": "patches.csv"}
    write_cube(os.path.join(directory, "cube.dslh"), scene.cube)
    manifest["cube"] = "cube.dslh"

    path = os.path.join(directory, "scene.json")
    write_json(path, manifest)
    return path


def load_scene(path: str, grid: Optional[WavelengthGrid] = None) -> Scene:
    """
    Loads a scene manifest. Depth 0 in the PFM means undefined.

    A manifest references either a DSLH cube or a patch label map plus a
    CSV of patch spectra; the cube wins when both are present.
    """
    manifest = read_json(path)
    base = os.path.dirname(path)
    source_grid = WavelengthGrid.from_dict(manifest.get("grid", {}))
    if "depth" not in manifest:
        raise ConfigError(f"scene manifest '{path}' names no depth map")
    depth = read_pfm(os.path.join(base, manifest["depth"])).astype(np.float64)
    if depth.ndim == 3:
        depth = depth[..., 0]
    depth = np.where(depth > 0, depth, np.nan)

    labels, patches = None, {}
    if "patches" in manifest:
        labels = read_pfm(os.path.join(base, manifest["patches"]["labels"])).astype(np.int64)
        table_grid, patches = read_spectra_table(os.path.join(base, manifest["patches"]["spectra"]))
        patches = {k: resample_values(v, table_grid, source_grid) for k, v in patches.items()}

    if "cube" in manifest:
        cube = read_cube(os.path.join(base, manifest["cube"])).astype(np.float64)
    elif labels is not None:
        table = np.stack(list(patches.values()))
        cube = np.where((labels >= 0)[..., None], table[np.clip(labels, 0, None)], 0.0)
    else:
        raise ConfigError(f"scene manifest '{path}' names neither a cube nor patches")

    scene = Scene(depth, cube, source_grid, manifest.get("name", "scene"), labels, patches)
    log.debug("Loaded scene '%s' %dx%d", scene.name, scene.shape[1], scene.shape[0])
    return scene.on_grid(grid) if grid is not None else scene
