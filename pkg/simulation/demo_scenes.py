"""
Demo scenes generated in code.

Functions:
    - colorchecker_spectra(): 24 smooth ColorChecker-like patch spectra
    - colorchecker_scene(): 4×6 patches on a fronto-parallel plane
    - bandpass_scene(): Nine 10 nm boxcars on a black background
    - two_box_scene(): Two planar regions at different depths
    - random_plane_scene(): Plane with random smooth reflectance per pixel
    - build_demo_scene(): Lookup by name
"""

import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from spectra.grid import DEFAULT_GRID, WavelengthGrid
from simulation.scene import Scene
from utils.error_types import ConfigError

log = logging.getLogger(__name__)

NEUTRALS = (0.9, 0.59, 0.36, 0.19, 0.09, 0.031)
BANDPASS_CENTERS = tuple(470.0 + 20.0 * i for i in range(9))
BOXCAR_WIDTH_NM = 10.0


def _bumps(w: np.ndarray, centers, widths, heights) -> np.ndarray:
    out = np.zeros((len(centers), w.size))
    for i, (c, s, h) in enumerate(zip(centers, widths, heights)):
        out[i] = h * np.exp(-0.5 * ((w - c) / s) ** 2)
    return out


def smooth_reflectance(rng: np.random.Generator, w: np.ndarray, count: int,
                       low: float = 0.2, high: float = 1.0, lobes: int = 3) -> np.ndarray:
    """
    Random smooth reflectance curves in [low, high].

    Returns:
        (count, N) array
    """
    centers = rng.uniform(w[0] - 40.0, w[-1] + 40.0, size=(count, lobes))
    widths = rng.uniform(25.0, 90.0, size=(count, lobes))
    heights = rng.uniform(0.0, 1.0, size=(count, lobes))
    curves = np.einsum("kl,kln->kn", heights,
                       np.exp(-0.5 * ((w[None, None, :] - centers[..., None]) / widths[..., None]) ** 2))
    peak = np.maximum(curves.max(axis=1, keepdims=True), 1e-9)
    return low + (high - low) * curves / peak


def colorchecker_spectra(grid: WavelengthGrid = DEFAULT_GRID) -> Dict[str, np.ndarray]:
    """
    Eighteen chromatic patches plus six neutrals, deterministic.

    Chromatic patches are sums of two broad lobes over a floor; the
    neutral row is flat at the classic ColorChecker gray levels.
    """
    w = grid.wavelengths
    rng = np.random.default_rng(24)
    patches = {}
    for i in range(18):
        lobes = _bumps(w, rng.uniform(420.0, 680.0, 2), rng.uniform(20.0, 70.0, 2), rng.uniform(0.2, 0.8, 2))
        floor = rng.uniform(0.03, 0.12)
        patches[f"patch_{i + 1:02d}"] = np.clip(floor + lobes.sum(axis=0), 0.0, 0.95)
    for i, level in enumerate(NEUTRALS):
        patches[f"patch_{19 + i:02d}"] = np.full(w.size, level)
    return patches


def _patch_labels(shape: Tuple[int, int], rows: int, cols: int) -> np.ndarray:
    height, width = shape
    r = np.minimum((np.arange(height) * rows) // height, rows - 1)
    c = np.minimum((np.arange(width) * cols) // width, cols - 1)
    return (r[:, None] * cols + c[None, :]).astype(np.int64)


def _from_patches(name: str, depth: np.ndarray, labels: np.ndarray,
                  patches: Dict[str, np.ndarray], grid: WavelengthGrid) -> Scene:
    table = np.stack(list(patches.values()))
    cube = np.where((labels >= 0)[..., None], table[np.clip(labels, 0, None)], 0.0)
    return Scene(depth, cube, grid, name, labels, patches)


def colorchecker_scene(shape: Tuple[int, int] = (64, 64), depth_mm: float = 800.0,
                       grid: WavelengthGrid = DEFAULT_GRID) -> Scene:
    """4 rows × 6 columns of patches covering the whole frame."""
    labels = _patch_labels(shape, 4, 6)
    depth = np.full(shape, float(depth_mm))
    return _from_patches("colorchecker", depth, labels, colorchecker_spectra(grid), grid)


def boxcar(grid: WavelengthGrid, center_nm: float, width_nm: float = BOXCAR_WIDTH_NM) -> np.ndarray:
    """Unit boxcar; samples on the edges read 0.5."""
    distance = np.abs(grid.wavelengths - center_nm)
    half = width_nm / 2.0
    return np.where(distance < half - 1e-9, 1.0, np.where(np.abs(distance - half) <= 1e-9, 0.5, 0.0))


def bandpass_scene(shape: Tuple[int, int] = (64, 64), depth_mm: float = 800.0,
                   grid: WavelengthGrid = DEFAULT_GRID, border: float = 0.15) -> Scene:
    """
    Nine boxcar patches in a 3×3 layout on black.

    Each patch occupies the inner part of its cell; the `border` fraction
    of every cell stays black.
    """
    height, width = shape
    cells = _patch_labels(shape, 3, 3)
    ry = (np.arange(height) * 3 / height) % 1.0
    rx = (np.arange(width) * 3 / width) % 1.0
    inner = ((ry[:, None] >= border) & (ry[:, None] < 1 - border)
             & (rx[None, :] >= border) & (rx[None, :] < 1 - border))
    labels = np.where(inner, cells, -1)
    patches = {f"bandpass_{int(c)}": boxcar(grid, c) for c in BANDPASS_CENTERS}
    depth = np.full(shape, float(depth_mm))
    return _from_patches("bandpass", depth, labels, patches, grid)


def two_box_scene(shape: Tuple[int, int] = (64, 64), depths_mm: Tuple[float, float] = (800.0, 1000.0),
                  reflectance: Tuple[float, float] = (0.6, 0.4),
                  grid: WavelengthGrid = DEFAULT_GRID) -> Scene:
    """Left half at depths_mm[0], right half at depths_mm[1]; patch labels 0 and 1."""
    height, width = shape
    labels = np.where(np.arange(width)[None, :] < width // 2, 0, 1).repeat(height, axis=0)
    depth = np.where(labels == 0, depths_mm[0], depths_mm[1]).astype(np.float64)
    patches = {"box_a": np.full(grid.count, reflectance[0]), "box_b": np.full(grid.count, reflectance[1])}
    return _from_patches("two-box", depth, labels, patches, grid)


def random_plane_scene(shape: Tuple[int, int], depth_mm: float = 800.0, seed: Optional[int] = 0,
                       grid: WavelengthGrid = DEFAULT_GRID) -> Scene:
    """Fronto-parallel plane with an independent random reflectance per pixel."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    cube = smooth_reflectance(rng, grid.wavelengths, shape[0] * shape[1]).reshape(*shape, grid.count)
    return Scene(np.full(shape, float(depth_mm)), cube, grid, "random-plane")


DEMO_SCENES: Dict[str, Callable[..., Scene]] = {
    "colorchecker": colorchecker_scene,
    "bandpass": bandpass_scene,
    "two-box": two_box_scene,
    "random-plane": random_plane_scene,
}


def build_demo_scene(name: str, shape: Tuple[int, int] = (64, 64), depth_mm: Optional[float] = None,
                     grid: WavelengthGrid = DEFAULT_GRID) -> Scene:
    if name not in DEMO_SCENES:
        raise ConfigError(f"unknown demo scene '{name}', choose from {sorted(DEMO_SCENES)}")
    if name == "two-box":
        return two_box_scene(shape, grid=grid)
    kwargs = {} if depth_mm is None else {"depth_mm": depth_mm}
    log.debug("Building demo scene '%s' at %dx%d", name, shape[1], shape[0])
    return DEMO_SCENES[name](shape, grid=grid, **kwargs)
