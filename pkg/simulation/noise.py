"""
Additive Gaussian measurement noise.
"""

import logging
from typing import Optional

import numpy as np

from simulation.stack import CaptureStack
from utils.error_types import DomainError

log = logging.getLogger(__name__)

DEFAULT_SIGMA = 0.01


def frame_generators(seed: Optional[int], count: int):
    """One independent Philox generator per frame, derived from `seed`."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def add_noise(stack: CaptureStack, sigma: float = DEFAULT_SIGMA, seed: Optional[int] = 0) -> CaptureStack:
    """
    Adds i.i.d. Gaussian noise to every sample and clamps at zero.

    Each frame draws from its own child seed, so the result does not
    depend on how frames are scheduled.

    Args:
        stack: Noiseless stack
        sigma: Standard deviation in stack units
        seed: Root seed

    Returns:
        New stack; sigma and seed are recorded in its metadata
    """
    if sigma < 0 or not np.isfinite(sigma):
        raise DomainError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return stack.with_frames(stack.frames.copy(), sigma=0.0, seed=seed)

    frames = np.empty_like(stack.frames)
    for i, rng in enumerate(frame_generators(seed, len(stack))):
        frames[i] = stack.frames[i] + rng.normal(0.0, sigma, size=stack.frames.shape[1:])
    np.maximum(frames, 0.0, out=frames)
    log.debug("Added sigma=%g noise to %d frames (seed %s)", sigma, len(stack), seed)
    return stack.with_frames(frames, sigma=float(sigma), seed=seed)
