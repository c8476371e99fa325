"""
End-to-end reconstruction: binary stack → depth, scanline stack → spectra.

Classes:
    - HyperspectralImage: Per-pixel spectra with diagnostics

Functions:
    - reconstruct_hyperspectral(): Per-pixel systems and batched solves at known depths
    - reconstruct(): Depth then spectra
    - save_depth_map() / save_hyperspectral(): Artifacts on disk
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from correspondence.model import CorrespondenceModel, order_validity
from optics.rig import Rig
from reconstruction.depth import DEFAULT_DEPTH_RANGE, DepthMap, reconstruct_depth
from reconstruction.solver import MAX_ITERATIONS, solve_quadratic
from reconstruction.system import build_system_batch, scanline_spec
from reconstruction.weights import KappaWeights, compute_kappa, zero_order_only
from simulation.geometry import trace_geometry
from simulation.stack import CaptureStack
from spectra.curves import EfficiencySet, ResponseSet
from spectra.grid import WavelengthGrid
from spectra.srgb import to_srgb
from utils.codecs.cube import write_cube
from utils.codecs.pfm import write_pfm
from utils.codecs.tables import write_table
from utils.error_types import DomainError, PixelFlag
from utils.func import progress_enabled
from utils.workers import chunk_ranges, run_chunked

log = logging.getLogger(__name__)

SOLVE_CHUNK = 256
ORDER_BITS = {0: 1, -1: 2, 1: 4}


@dataclass(frozen=True)
class HyperspectralImage:
    """
    Attributes:
        cube: (H, W, N) nonnegative spectra, zero where unsolved
        grid: Wavelength grid
        residual: (H, W) RMS data residual, NaN where unsolved
        orders_used: (H, W) bit mask of orders in the system (1: zero, 2: -1, 4: +1)
        iterations: (H, W) solver iterations
        flags: (H, W) PixelFlag bits
    """
    cube: np.ndarray = field(repr=False)
    grid: WavelengthGrid
    residual: np.ndarray = field(repr=False)
    orders_used: np.ndarray = field(repr=False)
    iterations: np.ndarray = field(repr=False)
    flags: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.cube.shape[:2]

    @property
    def solved(self) -> np.ndarray:
        return np.isfinite(self.residual)


def reconstruct_hyperspectral(stack: CaptureStack, depth_map: DepthMap, rig: Rig,
                              model: Optional[CorrespondenceModel], responses: ResponseSet,
                              eta: EfficiencySet, kappa_lambda: float = 0.005,
                              kappa_sigma: float = 5.0, kappa_interior: float = 0.9,
                              mode: str = "exact", orders: Optional[Sequence[int]] = None,
                              zero_order: bool = False, max_iterations: int = MAX_ITERATIONS,
                              n_jobs: int = 1) -> HyperspectralImage:
    """
    Recovers H(p, λ) at every pixel with a valid depth.

    Args:
        stack: Scanline stack
        depth_map: Depths the systems are built at
        rig: The rig
        model: First-order correspondence model
        responses: Camera and projector curves; their grid is the output grid
        eta: Diffraction efficiency
        kappa_lambda: Smoothness weight κ_λ
        kappa_sigma: Blur σ for κ_1
        kappa_interior: κ_1 away from pixels without first orders
        mode: "exact" or "narrowband" system rows
        orders: First orders used in the systems
        zero_order: Ablation using only the zero-order rows (κ_1 = 0)
        max_iterations: Solver iteration cap
        n_jobs: Worker threads

    Returns:
        HyperspectralImage
    """
    if stack.kind != "scanline":
        raise DomainError(f"hyperspectral reconstruction needs a scanline stack, got '{stack.kind}'")
    if stack.shape != depth_map.shape:
        raise DomainError(f"stack {stack.shape} and depth map {depth_map.shape} differ in size")
    grid = responses.grid
    height, width = stack.shape
    N = grid.count

    valid = depth_map.valid.ravel()
    index = np.flatnonzero(valid)
    rows, cols = np.divmod(index, width)
    pixels = np.stack([cols, rows], axis=-1).astype(np.float64)
    depth = depth_map.depth.ravel()[index]
    geometry = trace_geometry(pixels, depth, rig, model, grid, orders, n_jobs)

    # pixels whose valid first-order set is empty
    projector_width = scanline_spec(stack).width
    row = geometry.row
    any_order = np.zeros(index.size, dtype=bool)
    for m in geometry.orders:
        any_order |= order_validity(geometry.first[m], geometry.zero[:, 0], m, projector_width)
    any_order &= (row >= 0) & (row < rig.projector.height)
    incomplete = np.zeros(height * width, dtype=bool)
    incomplete[index[~any_order]] = True
    if zero_order:
        kappa: KappaWeights = zero_order_only(stack.shape, kappa_lambda)
    else:
        kappa = compute_kappa(incomplete.reshape(height, width), kappa_sigma, kappa_interior, kappa_lambda)
    k1 = kappa.first.ravel()[index]
    k0 = kappa.zero.ravel()[index]
    use_orders = () if zero_order else None

    def solve_chunk(start, stop):
        batch = build_system_batch(geometry.take(slice(start, stop)), stack, rig, responses, eta, mode, use_orders)
        Q, b, c = batch.normal_equations(k1[start:stop], k0[start:stop])
        result = solve_quadratic(Q, b, c, kappa.kappa_lambda, max_iterations)
        solvable = batch.solvable
        used = batch.has_zero * ORDER_BITS[0]
        for o, m in enumerate(batch.orders):
            used = used | (np.any(batch.keep[:, o], axis=1) * ORDER_BITS[m])
        flags = result.flags.copy()
        flags[~solvable] |= int(PixelFlag.UNSOLVABLE)
        no_first = ~np.any(batch.keep, axis=(1, 2))
        flags[no_first] |= int(PixelFlag.NO_ORDERS)
        values = np.where(solvable[:, None], result.values, 0.0)
        residual = np.where(solvable, batch.residual(values), np.nan)
        return values, residual, used.astype(np.uint8), result.iterations, flags

    parts = []
    group = SOLVE_CHUNK * 8 * max(1, n_jobs)
    with tqdm(total=index.size, desc="solve", disable=not progress_enabled(), leave=False) as bar:
        for lo, hi in chunk_ranges(index.size, group):
            parts.extend(run_chunked(lambda a, b: solve_chunk(lo + a, lo + b), hi - lo, n_jobs, SOLVE_CHUNK))
            bar.update(hi - lo)

    cube = np.zeros((height * width, N))
    residual = np.full(height * width, np.nan)
    used = np.zeros(height * width, dtype=np.uint8)
    iterations = np.zeros(height * width, dtype=np.int64)
    flags = np.zeros(height * width, dtype=np.uint8)
    flags[~valid] |= int(PixelFlag.INVALID_DEPTH | PixelFlag.UNSOLVABLE)
    if parts:
        cube[index] = np.concatenate([p[0] for p in parts])
        residual[index] = np.concatenate([p[1] for p in parts])
        used[index] = np.concatenate([p[2] for p in parts])
        iterations[index] = np.concatenate([p[3] for p in parts])
        flags[index] |= np.concatenate([p[4] for p in parts]) | geometry.flags
    if stack.flags is not None:
        flags |= (stack.flags.ravel() & PixelFlag.SATURATED).astype(np.uint8)

    solved = int(np.isfinite(residual).sum())
    log.info("Solved %d of %d pixels (%d without first orders)", solved, index.size, int(incomplete.sum()))
    shape = (height, width)
    return HyperspectralImage(cube.reshape(height, width, N), grid, residual.reshape(shape),
                              used.reshape(shape), iterations.reshape(shape), flags.reshape(shape))


def reconstruct(binary: CaptureStack, scanline: CaptureStack, rig: Rig,
                model: Optional[CorrespondenceModel], responses: ResponseSet, eta: EfficiencySet,
                tau: float = 0.5, threshold_mode: str = "relative", min_contrast: float = 0.01,
                depth_range: Tuple[float, float] = DEFAULT_DEPTH_RANGE,
                **kwargs) -> Tuple[DepthMap, HyperspectralImage]:
    """Decodes depth from the binary stack, then solves spectra at those depths."""
    depth_map = reconstruct_depth(binary, rig, tau, threshold_mode, min_contrast, depth_range)
    image = reconstruct_hyperspectral(scanline, depth_map, rig, model, responses, eta, **kwargs)
    return depth_map, image


def save_depth_map(depth_map: DepthMap, directory: str) -> dict:
    """depth.pfm (0 where invalid) and depth_flags.pfm; returns the file names."""
    write_pfm(os.path.join(directory, "depth.pfm"), np.nan_to_num(depth_map.depth, nan=0.0))
    write_pfm(os.path.join(directory, "depth_flags.pfm"), depth_map.flags.astype(np.float32))
    return {"depth": "depth.pfm", "flags": "depth_flags.pfm"}


def save_hyperspectral(image: HyperspectralImage, directory: str) -> dict:
    """Writes the DSLH cube, an sRGB preview and a per-pixel diagnostics CSV."""
    write_cube(os.path.join(directory, "cube.dslh"), image.cube)
    write_pfm(os.path.join(directory, "preview_srgb.pfm"), to_srgb(image.cube, image.grid))
    height, width = image.shape
    rows, cols = np.mgrid[0:height, 0:width]
    diagnostics = pd.DataFrame({
        "px": cols.ravel(),
        "py": rows.ravel(),
        "residual": image.residual.ravel(),
        "orders_used": image.orders_used.ravel(),
        "iterations": image.iterations.ravel(),
        "flags": image.flags.ravel(),
    })
    write_table(os.path.join(directory, "diagnostics.csv"), diagnostics)
    return {"cube": "cube.dslh", "preview": "preview_srgb.pfm", "diagnostics": "diagnostics.csv"}
