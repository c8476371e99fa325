"""
Per-pixel projector geometry shared by the renderer and the spectral solver.

For each camera pixel at a known depth this records the zero-order
projector pixel, the first-order column of every grid wavelength and the
distance to the projector center.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from correspondence.model import CorrespondenceModel, columns_on_grid, order_validity
from correspondence.scanline_index import nearest_column
from correspondence.zero_order import zero_order_many
from optics.rig import Rig, propagation_distance
from spectra.grid import WavelengthGrid
from utils.error_types import PixelFlag
from utils.workers import concat, run_chunked

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PixelGeometry:
    """
    Attributes:
        pixels: (n, 2) camera pixels (column, row)
        depth: (n,) depths in mm
        distance: (n,) projector-center distance d(p)
        zero: (n, 2) zero-order projector pixel, NaN behind the projector
        first: Order → (n, N) first-order columns per grid wavelength
        grid: Wavelength grid of the `first` columns
        flags: (n,) PixelFlag bits
    """
    pixels: np.ndarray = field(repr=False)
    depth: np.ndarray = field(repr=False)
    distance: np.ndarray = field(repr=False)
    zero: np.ndarray = field(repr=False)
    first: Dict[int, np.ndarray] = field(repr=False)
    grid: WavelengthGrid
    flags: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.pixels.shape[0]

    @property
    def orders(self):
        return tuple(sorted(self.first))

    @property
    def row(self) -> np.ndarray:
        """Nearest projector row, -1 where undefined."""
        return _to_index(self.zero[:, 1])

    @property
    def zero_col(self) -> np.ndarray:
        return _to_index(self.zero[:, 0])

    def first_cols(self, m: int) -> np.ndarray:
        return _to_index(self.first[m])

    def order_valid(self, m: int, projector_width: int) -> np.ndarray:
        """(n,) pixels where order m lands wholly on the projector, on its side of the zero order."""
        return order_validity(self.first[m], self.zero[:, 0], m, projector_width)

    def take(self, sl) -> "PixelGeometry":
        return PixelGeometry(self.pixels[sl], self.depth[sl], self.distance[sl], self.zero[sl],
                             {m: c[sl] for m, c in self.first.items()}, self.grid, self.flags[sl])


def _to_index(values: np.ndarray) -> np.ndarray:
    finite = np.isfinite(values)
    return np.where(finite, nearest_column(np.where(finite, values, -1.0)), -1)


def trace_geometry(pixels: np.ndarray, depth: np.ndarray, rig: Rig,
                   model: Optional[CorrespondenceModel], grid: WavelengthGrid,
                   orders: Optional[Sequence[int]] = None, n_jobs: int = 1) -> PixelGeometry:
    """
    Traces zero and first orders for pixels at known depths.

    Args:
        pixels: (n, 2) camera pixels
        depth: (n,) positive depths
        rig: The rig
        model: First-order model; None traces the zero order only
        grid: Wavelength grid for first-order columns
        orders: First orders to trace (default: rig orders present in the model)
        n_jobs: Worker threads

    Returns:
        PixelGeometry; first-order columns outside the model hull are NaN and flagged
    """
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    depth = np.asarray(depth, dtype=np.float64).reshape(-1)
    if model is None:
        orders = ()
    elif orders is None:
        orders = tuple(m for m in rig.grating.first_orders if m in model.orders)
    else:
        orders = tuple(m for m in orders if m != 0 and m in model.orders and m in rig.grating.orders)

    def trace(start, stop):
        p, z = pixels[start:stop], depth[start:stop]
        zero = zero_order_many(p, z, rig)
        distance = propagation_distance(p, z, rig)
        first = {m: columns_on_grid(model, p, z, m, grid) for m in orders}
        return zero, distance, first

    parts = run_chunked(trace, pixels.shape[0], n_jobs, chunk=8192)
    if not parts:
        empty = np.zeros((0,))
        return PixelGeometry(pixels, depth, empty, np.zeros((0, 2)),
                             {m: np.zeros((0, grid.count)) for m in orders}, grid,
                             np.zeros(0, dtype=np.uint8))
    zero = concat([p[0] for p in parts])
    distance = concat([p[1] for p in parts])
    first = {m: concat([p[2][m] for p in parts]) for m in orders}

    flags = np.zeros(pixels.shape[0], dtype=np.uint8)
    for m, cols in first.items():
        flags[np.any(~np.isfinite(cols), axis=1)] |= int(PixelFlag.OUT_OF_HULL)
    hull = int(np.count_nonzero(flags & PixelFlag.OUT_OF_HULL))
    if hull:
        log.warning("%d pixels fall outside the correspondence model hull", hull)
    return PixelGeometry(pixels, depth, distance, zero, first, grid, flags)
