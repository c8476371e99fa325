"""
Forward renderer for the dispersive image formation model.

    I(p, c) = k · Σ_λ Ω^cam(c, λ) · H(p, λ) / d(p)² · Σ_m η_m(λ) · L(q_m(p, λ), λ)

with L(q, λ) = Σ_c' P(q, c') · Ω^proj(c', λ) and k the exposure scale.

Classes:
    - Illumination: Geometry plus radiometry for one (scene, rig, model) triple

Functions:
    - prepare_illumination(): Trace every defined scene pixel once
    - spectral_illumination(): Per-wavelength light reaching pixels under a pattern
    - render() / render_stack(): Images and capture stacks
    - auto_exposure(): Exposure scale for a pattern kind
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from correspondence.model import CorrespondenceModel
from optics.rig import Rig
from patterns.pattern_set import Pattern, PatternSet
from simulation.geometry import PixelGeometry, trace_geometry
from simulation.scene import Scene
from simulation.stack import CaptureStack
from spectra.curves import EfficiencySet, ResponseSet
from utils.error_types import DomainError, PixelFlag
from utils.func import progress_enabled
from utils.workers import concat, run_chunked

log = logging.getLogger(__name__)

RENDER_CHUNK = 4096


@dataclass(frozen=True)
class Illumination:
    """
    Everything needed to render any pattern for one scene.

    Attributes:
        shape: Camera (H, W)
        index: (n,) flat indices of pixels with defined depth
        geometry: Traced geometry of those pixels
        reflectance: (n, N) H(p, λ) / d(p)²
        eta: Order → (N,) efficiency on the response grid
        responses: Camera and projector curves
        flags: (H, W) PixelFlag bits
    """
    shape: tuple
    index: np.ndarray = field(repr=False)
    geometry: PixelGeometry = field(repr=False)
    reflectance: np.ndarray = field(repr=False)
    eta: Dict[int, np.ndarray] = field(repr=False)
    responses: ResponseSet = field(repr=False)
    flags: np.ndarray = field(repr=False)

    @property
    def reference_distance(self) -> float:
        if len(self.geometry) == 0:
            return 1.0
        return float(np.median(self.geometry.distance))


def prepare_illumination(scene: Scene, rig: Rig, model: Optional[CorrespondenceModel],
                         responses: ResponseSet, eta: EfficiencySet,
                         orders: Optional[Sequence[int]] = None, n_jobs: int = 1) -> Illumination:
    """
    Traces the zero and first orders for every scene pixel with defined depth.

    Args:
        scene: Ground-truth scene
        rig: The rig
        model: First-order correspondence model (None renders the zero order only)
        responses: Camera and projector curves; their grid is the render grid
        eta: Diffraction efficiency; orders it lacks contribute nothing
        orders: Restrict the first orders rendered
        n_jobs: Worker threads
    """
    grid = responses.grid
    scene = scene.on_grid(grid)
    eta = eta.on_grid(grid)
    if orders is None:
        orders = [m for m in eta.orders if m != 0]
    orders = [m for m in orders if m in eta.orders and m != 0]

    valid = scene.valid.ravel()
    index = np.flatnonzero(valid)
    pixels = scene.pixels()[index]
    depth = scene.depth.ravel()[index]
    geometry = trace_geometry(pixels, depth, rig, model, grid, orders, n_jobs)

    flags = np.zeros(scene.shape[0] * scene.shape[1], dtype=np.uint8)
    flags[~valid] |= int(PixelFlag.INVALID_DEPTH)
    flags[index] |= geometry.flags
    reflectance = scene.cube.reshape(-1, grid.count)[index] / geometry.distance[:, None] ** 2
    eta_values = {m: eta.values(m) for m in (0, *geometry.orders)}
    log.debug("Prepared illumination for %d pixels, first orders %s", index.size, geometry.orders)
    return Illumination(scene.shape, index, geometry, reflectance, eta_values, responses,
                        flags.reshape(scene.shape))


def spectral_illumination(pattern: Pattern, geometry: PixelGeometry,
                          eta: Dict[int, np.ndarray], proj: np.ndarray) -> np.ndarray:
    """
    Σ_m η_m(λ) · L(q_m(p, λ), λ) for each pixel and grid wavelength.

    A first order lights a pixel only where it is valid there: every grid
    wavelength lands on the projector, on its side of the zero order.

    Returns:
        (n, N) array
    """
    row = geometry.row
    zero = pattern.sample(row, geometry.zero_col)
    light = eta[0] * (zero @ proj)
    for m in geometry.orders:
        cols = geometry.first_cols(m)
        values = pattern.sample(np.broadcast_to(row[:, None], cols.shape), cols)
        valid = geometry.order_valid(m, pattern.width)
        light += eta.get(m, 0.0) * np.einsum("nlc,cl->nl", values, proj) * valid[:, None]
    return light


def _render_pixels(pattern: Pattern, illumination: Illumination, n_jobs: int) -> np.ndarray:
    cam = illumination.responses.cam_matrix
    proj = illumination.responses.proj_matrix

    def render_chunk(start, stop):
        light = spectral_illumination(pattern, illumination.geometry.take(slice(start, stop)),
                                      illumination.eta, proj)
        return (illumination.reflectance[start:stop] * light) @ cam.T

    parts = run_chunked(render_chunk, illumination.index.size, n_jobs, RENDER_CHUNK)
    return concat(parts) if parts else np.zeros((0, 3))


def render_illuminated(pattern: Pattern, illumination: Illumination,
                       exposure_scale: float = 1.0, n_jobs: int = 1) -> np.ndarray:
    """Renders one pattern; returns an (H, W, 3) image, zero where depth is undefined."""
    height, width = illumination.shape
    image = np.zeros((height * width, 3))
    image[illumination.index] = exposure_scale * _render_pixels(pattern, illumination, n_jobs)
    image[(illumination.flags.ravel() & PixelFlag.OUT_OF_HULL) != 0] = 0.0
    return image.reshape(height, width, 3)


def render(pattern: Pattern, scene: Scene, rig: Rig, model: Optional[CorrespondenceModel],
           responses: ResponseSet, eta: EfficiencySet, exposure_scale: float = 1.0,
           n_jobs: int = 1) -> np.ndarray:
    """
    Renders a single pattern.

    Args:
        pattern: Projector pattern
        scene: Ground-truth scene
        rig: The rig
        model: First-order correspondence model
        responses: Camera and projector curves
        eta: Diffraction efficiency
        exposure_scale: Linear gain k
        n_jobs: Worker threads

    Returns:
        (H, W, 3) linear radiance
    """
    illumination = prepare_illumination(scene, rig, model, responses, eta, n_jobs=n_jobs)
    return render_illuminated(pattern, illumination, exposure_scale, n_jobs)


def auto_exposure(kind: str, illumination: Illumination) -> float:
    """
    Exposure scale for a pattern kind.

    Binary and reference stacks: a white-lit H=1 pixel at the reference
    distance reads 1.0 in its brightest channel from the zero order.
    Scanline stacks: the brightest single-wavelength first-order contribution
    reads 1.0; without first orders the zero order is used per wavelength.
    """
    responses = illumination.responses
    cam = responses.cam_matrix
    emitted = responses.proj_total
    d2 = illumination.reference_distance ** 2
    if kind == "scanline":
        first = [m for m in illumination.eta if m != 0]
        spectra = [illumination.eta[m] for m in first] or [illumination.eta[0]]
        peak = max(float(np.max(cam * (s * emitted)[None, :])) for s in spectra) / d2
    else:
        peak = float(np.max(cam @ (illumination.eta[0] * emitted))) / d2
    if peak <= 0:
        raise DomainError("cannot expose: the rig delivers no light")
    return 1.0 / peak


def render_stack(patterns: PatternSet, scene: Scene, rig: Rig,
                 model: Optional[CorrespondenceModel], responses: ResponseSet,
                 eta: EfficiencySet, exposure: Union[str, float] = "auto",
                 orders: Optional[Sequence[int]] = None, n_jobs: int = 1,
                 illumination: Optional[Illumination] = None) -> CaptureStack:
    """
    Renders every pattern of a set in order.

    Args:
        patterns: Pattern set
        scene: Ground-truth scene
        rig: The rig
        model: First-order correspondence model
        responses: Camera and projector curves
        eta: Diffraction efficiency
        exposure: "auto" or a fixed linear gain
        orders: Restrict the first orders rendered
        n_jobs: Worker threads
        illumination: Reuse a prepared illumination

    Returns:
        Noiseless CaptureStack with exposure_scale recorded in its metadata
    """
    if illumination is None:
        illumination = prepare_illumination(scene, rig, model, responses, eta, orders, n_jobs)
    kind = "scanline" if patterns.kind == "scanline" else "binary"
    scale = auto_exposure(kind, illumination) if exposure == "auto" else float(exposure)

    height, width = illumination.shape
    frames = np.zeros((len(patterns), height, width, 3))
    iterator = tqdm(patterns, desc=f"render {patterns.kind}", disable=not progress_enabled(), leave=False)
    for i, pattern in enumerate(iterator):
        frames[i] = render_illuminated(pattern, illumination, scale, n_jobs)

    metadata = {
        "exposure_scale": scale,
        "projector_scale": 1.0,
        "sigma": 0.0,
        "seed": None,
        "rig": rig.name,
        "scene": scene.name,
        "orders": list(illumination.geometry.orders),
    }
    log.info("Rendered %d %s frames at %dx%d (exposure %.4g)", len(patterns), patterns.kind,
             width, height, scale)
    return CaptureStack(frames, tuple(patterns.tags), patterns.kind, dict(patterns.params), metadata,
                        illumination.flags.copy())
