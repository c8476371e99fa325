"""
Projector column to scanline pattern index.
"""

import numpy as np

from patterns.scanline import ScanlineSpec
from utils.error_types import CoverageError


def nearest_column(q_col):
    """Round half up to the projector column that contains q_col."""
    return np.floor(np.asarray(q_col, dtype=np.float64) + 0.5).astype(np.int64)


def px2index_many(q_col: np.ndarray, spec: ScanlineSpec) -> np.ndarray:
    """
    Vectorized px2index. Columns outside the projector map to -1.
    """
    q = np.asarray(q_col, dtype=np.float64)
    finite = np.isfinite(q)
    col = nearest_column(np.where(finite, q, -1.0))
    inside = finite & (col >= 0) & (col < spec.width)

    w, s, last = spec.line_width, spec.shift, spec.count - 1
    # covering patterns: s*i <= col < s*i + w, plus the edge-clipped last line
    lo = np.clip(-((w - 1 - col) // s), 0, last)
    hi = np.minimum(col // s, last)
    # nearest line center; exact ties resolve downward
    ideal = np.ceil((q - (w - 1) / 2.0) / s - 0.5)
    index = np.clip(np.where(finite, ideal, 0), lo, hi).astype(np.int64)
    return np.where(inside, index, -1)


def px2index(q_col: float, spec: ScanlineSpec) -> int:
    """
    Index of the scanline pattern that lights projector column q_col.

    Pattern i covers [s·i, s·i + w). Among the covering patterns the one with
    its line center nearest to q_col wins; ties go to the smaller index.

    Raises:
        CoverageError: No pattern covers the column
    """
    index = int(px2index_many(np.asarray([q_col]), spec)[0])
    if index < 0:
        raise CoverageError(f"column {q_col} lies outside the {spec.width}-pixel projector")
    return index
