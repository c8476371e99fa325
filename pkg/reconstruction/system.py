"""
Per-pixel linear systems relating scanline observations to H(p, λ).

For every first order m and grid wavelength λ_j the frame that lights the
order-m column of λ_j is δ_{m,j} = px2index(q_m(p, λ_j)). Its three channel
readings form one row block. The zero order contributes the frame that
lights its own column.

Two row models are available:
    - exact: each row carries the same per-frame spectral illumination the
      renderer uses, summed over every wavelength and order the frame lights
    - narrowband: first-order row j has the single nonzero column j

Classes:
    - SystemMatrix: Row blocks for one pixel
    - SystemBatch: Row blocks for many pixels in fixed-shape arrays

Functions:
    - build_system_batch(): Rows for a chunk of traced pixels
    - build_system(): Rows for one pixel
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from correspondence.model import CorrespondenceModel
from correspondence.scanline_index import px2index_many
from optics.rig import Rig
from patterns.scanline import ScanlineSpec
from simulation.geometry import PixelGeometry, trace_geometry
from simulation.stack import CaptureStack
from spectra.curves import EfficiencySet, ResponseSet
from utils.error_types import DomainError

log = logging.getLogger(__name__)

SYSTEM_MODELS = ("exact", "narrowband")


@dataclass(frozen=True)
class SystemMatrix:
    """
    Attributes:
        blocks: Order → (A_m of shape (rows, N), I_m of shape (rows,)); order 0 is the broadband block
        frames: Order → frame index of every row
    """
    blocks: Dict[int, Tuple[np.ndarray, np.ndarray]]
    frames: Dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return all(a.shape[0] == 0 for a, _ in self.blocks.values())

    @property
    def orders(self) -> Tuple[int, ...]:
        return tuple(m for m, (a, _) in sorted(self.blocks.items()) if a.shape[0])

    def rows(self, m: int) -> int:
        return self.blocks[m][0].shape[0] if m in self.blocks else 0


@dataclass(frozen=True)
class SystemBatch:
    """
    Fixed-shape rows for n pixels.

    Attributes:
        orders: First orders along axis 1 of `first`
        first: (n, O, N, 3, N) first-order rows (pixel, order, target wavelength, channel, λ)
        first_obs: (n, O, N, 3) matching observations
        keep: (n, O, N) rows that enter the system
        zero: (n, 3, N) zero-order rows
        zero_obs: (n, 3) zero-order observations
        has_zero: (n,) zero-order frame exists
        frames: (n, O, N) frame index per first-order row, -1 where undefined
        zero_frame: (n,) zero-order frame index, -1 where undefined
        valid: Order → (n,) order validity
    """
    orders: Tuple[int, ...]
    first: np.ndarray = field(repr=False)
    first_obs: np.ndarray = field(repr=False)
    keep: np.ndarray = field(repr=False)
    zero: np.ndarray = field(repr=False)
    zero_obs: np.ndarray = field(repr=False)
    has_zero: np.ndarray = field(repr=False)
    frames: np.ndarray = field(repr=False)
    zero_frame: np.ndarray = field(repr=False)
    valid: Dict[int, np.ndarray] = field(repr=False)

    def __len__(self) -> int:
        return self.zero.shape[0]

    @property
    def solvable(self) -> np.ndarray:
        return self.has_zero | np.any(self.keep, axis=(1, 2))

    def normal_equations(self, kappa_first: np.ndarray, kappa_zero: np.ndarray):
        """
        Weighted Gram matrices Q, right-hand sides b and constants c of
        Σ_m κ_m‖A_m H − I_m‖² = HᵀQH − 2bᵀH + c.
        """
        w1 = np.asarray(kappa_first, dtype=np.float64)[:, None, None] * self.keep
        w0 = np.asarray(kappa_zero, dtype=np.float64) * self.has_zero
        weighted = self.first * w1[..., None, None]
        Q = np.einsum("nojcl,nojck->nlk", weighted, self.first)
        Q += w0[:, None, None] * np.einsum("ncl,nck->nlk", self.zero, self.zero)
        b = np.einsum("nojcl,nojc->nl", weighted, self.first_obs)
        b += w0[:, None] * np.einsum("ncl,nc->nl", self.zero, self.zero_obs)
        c = np.einsum("noj,nojc->n", w1, self.first_obs ** 2) + w0 * np.sum(self.zero_obs ** 2, axis=1)
        return Q, b, c

    def residual(self, H: np.ndarray) -> np.ndarray:
        """Root-mean-square data residual over the rows in use, per pixel."""
        r1 = np.einsum("nojcl,nl->nojc", self.first, H) - self.first_obs
        r0 = np.einsum("ncl,nl->nc", self.zero, H) - self.zero_obs
        sq = np.einsum("noj,nojc->n", self.keep.astype(np.float64), r1 ** 2) + self.has_zero * np.sum(r0 ** 2, axis=1)
        count = 3 * (self.keep.sum(axis=(1, 2)) + self.has_zero)
        return np.sqrt(sq / np.maximum(count, 1))

    def pixel(self, i: int) -> SystemMatrix:
        blocks, frames = {}, {}
        if self.has_zero[i]:
            blocks[0] = (self.zero[i], self.zero_obs[i])
            frames[0] = np.repeat(self.zero_frame[i], 3)
        else:
            blocks[0] = (np.zeros((0, self.zero.shape[-1])), np.zeros(0))
            frames[0] = np.zeros(0, dtype=np.int64)
        for o, m in enumerate(self.orders):
            rows = self.keep[i, o]
            blocks[m] = (self.first[i, o][rows].reshape(-1, self.first.shape[-1]),
                         self.first_obs[i, o][rows].reshape(-1))
            frames[m] = np.repeat(self.frames[i, o][rows], 3)
        return SystemMatrix(blocks, frames)


def scanline_spec(stack: CaptureStack) -> ScanlineSpec:
    try:
        width = int(stack.params["resolution"][0])
        return ScanlineSpec(width, int(stack.params.get("w", 5)), int(stack.params.get("s", 2)))
    except KeyError as e:
        raise DomainError(f"scanline stack lacks parameter {e}")


def _frame_spans(frames: np.ndarray, spec: ScanlineSpec) -> Tuple[np.ndarray, np.ndarray]:
    start = spec.shift * frames
    stop = np.where(frames == spec.count - 1, spec.width, start + spec.line_width)
    undefined = frames < 0
    return np.where(undefined, 0, start), np.where(undefined, 0, stop)


def _frame_light(frames: np.ndarray, cols: np.ndarray, spectra: np.ndarray, lit_mask: np.ndarray,
                 row_ok: np.ndarray, spec: ScanlineSpec) -> np.ndarray:
    """
    Spectral light each frame delivers to each pixel.

    Args:
        frames: (n, R) frame indices
        cols: (n, M, N) nearest columns of every rendered order per wavelength
        spectra: (M, N) η_m(λ)·Σ_c Ω^proj_c(λ)
        lit_mask: (n, M) orders that light each pixel
        row_ok: (n,) zero-order row inside the projector

    Returns:
        (n, R, N)
    """
    start, stop = _frame_spans(frames, spec)
    c = cols[:, None]
    lit = (c >= start[..., None, None]) & (c < stop[..., None, None])
    light = np.einsum("nrml,ml,nm->nrl", lit.astype(np.float64), spectra, lit_mask.astype(np.float64))
    return light * row_ok[:, None, None]


def build_system_batch(geometry: PixelGeometry, stack: CaptureStack, rig: Rig,
                       responses: ResponseSet, eta: EfficiencySet, mode: str = "exact",
                       orders: Optional[Sequence[int]] = None) -> SystemBatch:
    """
    Row blocks for traced pixels.

    Args:
        geometry: Pixels traced at their estimated depths on the response grid
        stack: Scanline stack
        rig: The rig
        responses: Camera and projector curves
        eta: Diffraction efficiency used by the image formation model
        mode: "exact" or "narrowband"
        orders: First orders to use (default: every traced order)

    Returns:
        SystemBatch
    """
    if mode not in SYSTEM_MODELS:
        raise DomainError(f"unknown system model '{mode}', choose from {SYSTEM_MODELS}")
    spec = scanline_spec(stack)
    grid = responses.grid
    eta = eta.on_grid(grid)
    cam = responses.cam_matrix
    emitted = responses.proj_total
    k = stack.exposure_scale
    n, N = len(geometry), grid.count
    orders = tuple(m for m in (orders if orders is not None else geometry.orders) if m in geometry.orders)

    height, width = stack.shape
    pixel_index = (np.round(geometry.pixels[:, 1]).astype(np.int64) * width
                   + np.round(geometry.pixels[:, 0]).astype(np.int64))
    flat = stack.frames.reshape(len(stack), height * width, 3)

    row = geometry.row
    row_ok = (row >= 0) & (row < rig.projector.height)
    scale = k / geometry.distance ** 2

    # an order lights a pixel only where it is valid, whether or not it enters the system
    lit_orders = (0,) + geometry.orders
    lit_mask = np.stack([np.ones(n, dtype=bool)]
                        + [geometry.order_valid(m, spec.width) for m in geometry.orders], axis=1)
    cols = np.stack([np.broadcast_to(geometry.zero_col[:, None], (n, N))]
                    + [geometry.first_cols(m) for m in geometry.orders], axis=1)
    spectra = np.stack([eta.values(m) * emitted for m in lit_orders])

    zero_frame = px2index_many(geometry.zero[:, 0], spec)
    has_zero = (zero_frame >= 0) & row_ok
    zero_obs = flat[np.clip(zero_frame, 0, None), pixel_index] * has_zero[:, None]
    if mode == "exact":
        zero_light = _frame_light(zero_frame[:, None], cols, spectra, lit_mask, row_ok, spec)[:, 0]
    else:
        zero_light = np.broadcast_to(eta.values(0) * emitted, (n, N))
    zero = scale[:, None, None] * cam[None] * zero_light[:, None, :]

    O = len(orders)
    first = np.zeros((n, O, N, 3, N))
    first_obs = np.zeros((n, O, N, 3))
    keep = np.zeros((n, O, N), dtype=bool)
    frames = np.full((n, O, N), -1, dtype=np.int64)
    valid = {}
    diag = np.arange(N)
    for o, m in enumerate(orders):
        valid[m] = lit_mask[:, lit_orders.index(m)] & row_ok
        f = px2index_many(geometry.first[m], spec)
        frames[:, o] = f
        rows = valid[m][:, None] & (f >= 0)
        if mode == "exact":
            light = _frame_light(f, cols, spectra, lit_mask, row_ok, spec)
            first[:, o] = scale[:, None, None, None] * cam[None, None] * light[:, :, None, :]
            # one row block per distinct frame
            same = f[:, :, None] == f[:, None, :]
            earlier = np.tril(np.ones((N, N), dtype=bool), k=-1)
            rows &= ~np.any(same & earlier[None], axis=2)
        else:
            values = scale[:, None] * eta.values(m)[None] * emitted[None]
            first[:, o, diag, :, diag] = (values[:, :, None] * cam.T[None]).transpose(1, 0, 2)
        keep[:, o] = rows
        first_obs[:, o] = flat[np.clip(f, 0, None), pixel_index[:, None]] * rows[..., None]

    return SystemBatch(orders, first, first_obs, keep, zero, zero_obs, has_zero, frames, zero_frame, valid)


def build_system(p, z: float, stack: CaptureStack, rig: Rig, model: CorrespondenceModel,
                 responses: ResponseSet, eta: EfficiencySet, mode: str = "exact",
                 orders: Optional[Sequence[int]] = None) -> SystemMatrix:
    """
    The linear system of one pixel at its estimated depth.

    Invalid orders are omitted. A pixel without first orders keeps only the
    broadband zero-order rows; an empty system has no blocks with rows.
    """
    if not np.isfinite(z) or z <= 0:
        raise DomainError(f"depth must be positive, got {z}")
    geometry = trace_geometry(np.asarray(p, dtype=np.float64)[None], np.asarray([z], dtype=np.float64),
                              rig, model, responses.grid, orders)
    return build_system_batch(geometry, stack, rig, responses, eta, mode).pixel(0)
