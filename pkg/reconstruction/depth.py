"""
Depth from binary-code stacks.

Classes:
    - DecodedCodes: Per-pixel projector column/row codes
    - DepthMap: Per-pixel depth with validity flags

Functions:
    - decode_binary(): Threshold frames and assemble bits
    - triangulate() / triangulate_many(): Decoded column → depth
    - reconstruct_depth(): decode_binary then triangulate_many
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from optics.rig import Rig
from simulation.stack import CaptureStack
from utils.error_types import DomainError, PixelFlag

log = logging.getLogger(__name__)

DEFAULT_DEPTH_RANGE = (300.0, 1500.0)
BISECTION_ITERATIONS = 80


@dataclass(frozen=True)
class DecodedCodes:
    """
    Attributes:
        col: (H, W) decoded projector column, -1 where invalid
        row: (H, W) decoded projector row, -1 where invalid
        valid: (H, W) bool
        contrast: (H, W) white minus black gray level (NaN without references)
    """
    col: np.ndarray = field(repr=False)
    row: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)
    contrast: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DepthMap:
    """
    Attributes:
        depth: (H, W) depth in mm, NaN where invalid
        flags: (H, W) PixelFlag bits
        codes: The decoded codes the depths came from
    """
    depth: np.ndarray = field(repr=False)
    flags: np.ndarray = field(repr=False)
    codes: Optional[DecodedCodes] = field(default=None, repr=False)

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.depth)

    @property
    def shape(self):
        return self.depth.shape


def _gray(frames: np.ndarray) -> np.ndarray:
    return frames.mean(axis=-1)


def decode_binary(stack: CaptureStack, tau: float = 0.5, mode: str = "relative",
                  min_contrast: float = 0.01) -> DecodedCodes:
    """
    Decodes binary-code frames into projector columns and rows.

    Frames are converted to gray by averaging channels. In relative mode a
    bit is set where the frame exceeds black + τ·(white − black), using the
    reference frames; absolute mode compares against τ directly. Stacks with
    complementary codes compare each frame to its inverse instead.

    Args:
        stack: Binary stack, usually with white and black references
        tau: Threshold
        mode: "relative" or "absolute"
        min_contrast: Minimum white − black gray level for a valid pixel

    Returns:
        DecodedCodes; codes outside the projector are invalid
    """
    if mode not in ("relative", "absolute"):
        raise DomainError(f"unknown threshold mode '{mode}'")
    params = stack.params
    try:
        col_bits, row_bits = int(params["col_bits"]), int(params["row_bits"])
        width, height = (int(v) for v in params["resolution"])
    except KeyError as e:
        raise DomainError(f"stack lacks binary-code parameter {e}")

    white, black = stack.reference(True), stack.reference(False)
    have_refs = white is not None and black is not None
    shape = stack.shape
    if have_refs:
        white, black = _gray(white), _gray(black)
        contrast = white - black
        valid = contrast >= min_contrast
    else:
        contrast = np.full(shape, np.nan)
        valid = np.ones(shape, dtype=bool)
    if mode == "relative" and not have_refs and not params.get("complementary"):
        log.warning("No reference frames; falling back to absolute threshold %.3g", tau)
        mode = "absolute"

    frames = {}
    for i, tag in enumerate(stack.tags):
        if tag.kind == "binary":
            frames[(tag.index, tag.inverse)] = _gray(stack.frames[i])

    col = np.zeros(shape, dtype=np.int64)
    row = np.zeros(shape, dtype=np.int64)
    for i in range(col_bits + row_bits):
        if (i, False) not in frames:
            raise DomainError(f"binary stack lacks bit {i}")
        frame = frames[(i, False)]
        inverse = frames.get((i, True))
        if inverse is not None:
            bit = frame > inverse
            if not have_refs:
                valid &= np.abs(frame - inverse) >= min_contrast
        elif mode == "relative":
            bit = frame > black + tau * contrast
        else:
            bit = frame > tau
        if i < col_bits:
            col |= bit.astype(np.int64) << i
        else:
            row |= bit.astype(np.int64) << (i - col_bits)

    valid &= (col < width) & (row < height)
    log.debug("Decoded %d of %d pixels", int(valid.sum()), valid.size)
    return DecodedCodes(np.where(valid, col, -1), np.where(valid, row, -1), valid, contrast)


def _rectified_depth(pixels: np.ndarray, cols: np.ndarray, rig: Rig) -> np.ndarray:
    """
    Closed-form depth for an undistorted projector.

    The camera point is affine in depth, X(z) = a + z·b, so the projector
    column condition is linear in z.
    """
    camera, projector = rig.camera, rig.projector
    a = projector.to_model(camera.to_world(np.zeros((pixels.shape[0], 3))))
    b = projector.to_model(camera.to_world(camera.rays(pixels))) - a
    x = (cols - projector.cx) / projector.fx
    with np.errstate(divide="ignore", invalid="ignore"):
        return (a[:, 0] - x * a[:, 2]) / (x * b[:, 2] - b[:, 0])


def _bisect_depth(pixels: np.ndarray, cols: np.ndarray, rig: Rig,
                  depth_range: Tuple[float, float]) -> np.ndarray:
    def column(z):
        points = rig.camera.unproject_many(pixels, z)
        return rig.projector.project_many(points)[:, 0]

    lo = np.full(cols.shape, depth_range[0])
    hi = np.full(cols.shape, depth_range[1])
    f_lo = column(lo) - cols
    f_hi = column(hi) - cols
    bracketed = np.isfinite(f_lo) & np.isfinite(f_hi) & (np.sign(f_lo) != np.sign(f_hi))
    for _ in range(BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        f_mid = column(mid) - cols
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
    return np.where(bracketed, 0.5 * (lo + hi), np.nan)


def triangulate_many(pixels: np.ndarray, cols: np.ndarray, rig: Rig,
                     depth_range: Tuple[float, float] = DEFAULT_DEPTH_RANGE) -> np.ndarray:
    """
    Depths at which the zero-order column of each pixel equals its decoded column.

    Args:
        pixels: (n, 2) camera pixels
        cols: (n,) decoded projector columns
        rig: The rig
        depth_range: Working range; depths outside it are NaN

    Returns:
        (n,) depths, NaN where the rays do not meet inside the range
    """
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    cols = np.asarray(cols, dtype=np.float64).reshape(-1)
    if rig.projector.distortion is None:
        z = _rectified_depth(pixels, cols, rig)
    else:
        z = _bisect_depth(pixels, cols, rig, depth_range)
    inside = np.isfinite(z) & (z >= depth_range[0]) & (z <= depth_range[1])
    return np.where(inside, z, np.nan)


def triangulate(p, decoded_col: float, rig: Rig,
                depth_range: Tuple[float, float] = DEFAULT_DEPTH_RANGE) -> float:
    """
    Depth for one pixel and decoded column.

    Returns:
        Depth in mm, NaN when the rays do not intersect inside the working range
    """
    return float(triangulate_many(np.asarray(p, dtype=np.float64)[None], np.asarray([decoded_col]),
                                  rig, depth_range)[0])


def reconstruct_depth(stack: CaptureStack, rig: Rig, tau: float = 0.5, mode: str = "relative",
                      min_contrast: float = 0.01,
                      depth_range: Tuple[float, float] = DEFAULT_DEPTH_RANGE) -> DepthMap:
    """Decodes a binary stack and triangulates every valid pixel."""
    codes = decode_binary(stack, tau, mode, min_contrast)
    height, width = stack.shape
    rows, cols = np.mgrid[0:height, 0:width]
    pixels = np.stack([cols.ravel(), rows.ravel()], axis=-1).astype(np.float64)

    depth = np.full(height * width, np.nan)
    valid = codes.valid.ravel()
    depth[valid] = triangulate_many(pixels[valid], codes.col.ravel()[valid], rig, depth_range)
    depth = depth.reshape(height, width)

    flags = np.where(np.isfinite(depth), PixelFlag.OK, PixelFlag.INVALID_DEPTH).astype(np.uint8)
    if stack.flags is not None:
        flags |= stack.flags & int(PixelFlag.SATURATED)
    log.info("Triangulated %d of %d pixels", int(np.isfinite(depth).sum()), depth.size)
    return DepthMap(depth, flags, codes)
