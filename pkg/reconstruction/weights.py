"""
Data-term weights κ_1 (first orders) and κ_0 (zero order).

Pixels without any valid first order see only the broadband zero-order
rows. Blurring their mask lets the zero-order term take over smoothly
around them instead of switching per pixel.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from utils.error_types import DomainError

DEFAULT_BLUR_SIGMA = 5.0
DEFAULT_INTERIOR = 0.9


@dataclass(frozen=True)
class KappaWeights:
    """
    Attributes:
        first: (H, W) κ_1 in [0, interior]
        zero: (H, W) κ_0 = 1 − κ_1
        kappa_lambda: Smoothness weight κ_λ
    """
    first: np.ndarray = field(repr=False)
    zero: np.ndarray = field(repr=False)
    kappa_lambda: float = 0.005


def compute_kappa(incomplete: np.ndarray, sigma: float = DEFAULT_BLUR_SIGMA,
                  interior: float = DEFAULT_INTERIOR, kappa_lambda: float = 0.005) -> KappaWeights:
    """
    Args:
        incomplete: (H, W) bool, pixels whose valid first-order set is empty
        sigma: Gaussian blur σ in pixels (kernel truncated at 4σ)
        interior: κ_1 far from incomplete pixels
        kappa_lambda: Smoothness weight passed through

    Returns:
        KappaWeights with κ_0 + κ_1 = 1 everywhere
    """
    if not 0.0 <= interior <= 1.0:
        raise DomainError("interior kappa must lie in [0, 1]")
    if sigma < 0 or kappa_lambda < 0:
        raise DomainError("sigma and kappa_lambda must be >= 0")
    mask = np.asarray(incomplete, dtype=np.float64)
    blurred = gaussian_filter(mask, sigma=sigma, mode="nearest", truncate=4.0) if sigma > 0 else mask
    first = interior * (1.0 - np.clip(blurred, 0.0, 1.0))
    return KappaWeights(first, 1.0 - first, float(kappa_lambda))


def zero_order_only(shape, kappa_lambda: float = 0.005) -> KappaWeights:
    """κ_1 = 0 everywhere, the zero-order-only ablation."""
    return KappaWeights(np.zeros(shape), np.ones(shape), float(kappa_lambda))
