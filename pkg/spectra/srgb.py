"""
sRGB preview of hyperspectral cubes.

Color matching functions come from a multi-lobe Gaussian fit of the CIE 1931
2° observer, tabulated on the cube's grid. The result is white balanced so an
equal-energy spectrum renders neutral, then gamma encoded and clipped.
"""

import numpy as np

from spectra.grid import WavelengthGrid

# (weight, center, sigma below center, sigma above center) per lobe
_CMF_LOBES = {
    "x": ((1.056, 599.8, 37.9, 31.0), (0.362, 442.0, 16.0, 26.7), (-0.065, 501.1, 20.4, 26.2)),
    "y": ((0.821, 568.8, 46.9, 40.5), (0.286, 530.9, 16.3, 31.1)),
    "z": ((1.217, 437.0, 11.8, 36.0), (0.681, 459.0, 26.0, 13.8)),
}

XYZ_TO_LINEAR_SRGB = np.array([
    [3.2406, -1.5372, -0.4986],
    [-0.9689, 1.8758, 0.0415],
    [0.0557, -0.2040, 1.0570],
])


def _lobe(w: np.ndarray, center: float, below: float, above: float) -> np.ndarray:
    sigma = np.where(w < center, below, above)
    return np.exp(-0.5 * ((w - center) / sigma) ** 2)


def color_matching_table(grid: WavelengthGrid) -> np.ndarray:
    """3 x N table of x̄, ȳ, z̄ on the grid."""
    w = grid.wavelengths
    return np.stack([
        sum(a * _lobe(w, c, lo, hi) for a, c, lo, hi in _CMF_LOBES[axis])
        for axis in ("x", "y", "z")
    ])


def _encode_gamma(linear: np.ndarray) -> np.ndarray:
    return np.where(linear <= 0.0031308, 12.92 * linear,
                    1.055 * np.power(np.maximum(linear, 0.0), 1 / 2.4) - 0.055)


def to_srgb(cube: np.ndarray, grid: WavelengthGrid) -> np.ndarray:
    """
    Converts an (H, W, N) cube to an (H, W, 3) sRGB image in [0, 1].

    A flat spectrum of value v maps to gray with linear level v.
    """
    cube = np.asarray(cube, dtype=np.float64)
    weights = XYZ_TO_LINEAR_SRGB @ color_matching_table(grid)
    white = weights.sum(axis=1)
    # per-channel scaling so an equal-energy spectrum gives R = G = B
    weights = weights / white[:, None]
    linear = np.clip(cube @ weights.T, 0.0, 1.0)
    return np.clip(_encode_gamma(linear), 0.0, 1.0)
