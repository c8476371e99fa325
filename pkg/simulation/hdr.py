"""
Two-setting HDR capture simulation and merge.

A capture at exposure e and projector intensity i reads
clip(black + k·e·i·radiance, 0, saturation). Merging subtracts the black
level, divides by k·e·i and averages with hat weights.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from simulation.noise import add_noise
from simulation.stack import CaptureStack
from utils.error_types import DomainError, PixelFlag

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HDRSettings:
    """
    Attributes:
        low: (exposure, intensity) of the short capture
        high: (exposure, intensity) of the long capture
        gain: Sensor gain k applied to e·i
        saturation: Clip level
        black_level: Additive sensor offset
        plateau: Hat weight plateau bounds
    """
    low: Tuple[float, float] = (160.0, 0.2)
    high: Tuple[float, float] = (320.0, 0.8)
    gain: float = 1.0 / 256.0
    saturation: float = 1.0
    black_level: float = 0.0
    plateau: Tuple[float, float] = (0.05, 0.95)

    def __post_init__(self):
        for e, i in (self.low, self.high):
            if e <= 0 or i <= 0:
                raise DomainError("exposure and intensity scales must be positive")
        if self.gain <= 0 or self.saturation <= self.black_level:
            raise DomainError("need gain > 0 and saturation above the black level")

    def scale(self, setting: Tuple[float, float]) -> float:
        return self.gain * setting[0] * setting[1]

    @classmethod
    def from_dict(cls, data: dict) -> "HDRSettings":
        base = cls()
        return cls(
            low=tuple(data.get("low", base.low)),
            high=tuple(data.get("high", base.high)),
            gain=float(data.get("gain", base.gain)),
            saturation=float(data.get("saturation", base.saturation)),
            black_level=float(data.get("black_level", base.black_level)),
            plateau=tuple(data.get("plateau", base.plateau)),
        )


def hat_weight(values: np.ndarray, plateau: Sequence[float] = (0.05, 0.95),
               saturation: float = 1.0) -> np.ndarray:
    """Linear ramp up to plateau[0], flat to plateau[1], down to zero at saturation."""
    lo, hi = plateau
    v = np.asarray(values, dtype=np.float64)
    rise = np.clip(v / lo, 0.0, 1.0)
    fall = np.clip((saturation - v) / (saturation - hi), 0.0, 1.0)
    return np.minimum(rise, fall)


def capture(stack: CaptureStack, setting: Tuple[float, float], settings: HDRSettings,
            sigma: float = 0.0, seed: Optional[int] = None) -> CaptureStack:
    """One clipped capture of a radiance stack."""
    scale = settings.scale(setting)
    exposed = stack.with_frames(settings.black_level + scale * stack.frames)
    if sigma > 0:
        exposed = add_noise(exposed, sigma, seed)
    frames = np.clip(exposed.frames, 0.0, settings.saturation)
    return exposed.with_frames(frames, hdr_scale=scale, exposure=setting[0], intensity=setting[1],
                               black_level=settings.black_level, saturation=settings.saturation)


def simulate_hdr_pair(stack: CaptureStack, settings: HDRSettings = HDRSettings(),
                      sigma: float = 0.0, seed: Optional[int] = 0) -> Tuple[CaptureStack, CaptureStack]:
    """
    Low and high captures of a radiance stack.

    Args:
        stack: Noiseless radiance stack
        settings: Capture settings
        sigma: Noise added before clipping
        seed: Root seed; the high capture uses seed + 1

    Returns:
        (low, high) stacks
    """
    high_seed = None if seed is None else seed + 1
    low = capture(stack, settings.low, settings, sigma, seed)
    high = capture(stack, settings.high, settings, sigma, high_seed)
    return low, high


def merge_hdr(low: CaptureStack, high: CaptureStack,
              plateau: Sequence[float] = (0.05, 0.95)) -> CaptureStack:
    """
    Merges two clipped captures back to radiance.

    Each sample is weighted by the smaller of the hat weights of its raw and
    black-subtracted values. Where no weight survives, the high capture is
    used unless every input saturated; pixels saturated in both captures
    are flagged SATURATED in every frame.

    Returns:
        Radiance stack in the units of the stack given to simulate_hdr_pair
    """
    if low.frames.shape != high.frames.shape:
        raise DomainError("HDR captures must have the same shape")
    saturation = float(low.metadata.get("saturation", 1.0))
    black = float(low.metadata.get("black_level", 0.0))
    radiance, weights, saturated = [], [], []
    for stack in (low, high):
        scale = float(stack.metadata.get("hdr_scale", 1.0))
        raw = stack.frames
        lifted = raw - black
        radiance.append(lifted / scale)
        weights.append(np.minimum(hat_weight(raw, plateau, saturation),
                                  hat_weight(lifted, plateau, saturation - black)))
        saturated.append(raw >= saturation)

    total = weights[0] + weights[1]
    merged = np.where(total > 0,
                      (weights[0] * radiance[0] + weights[1] * radiance[1]) / np.where(total > 0, total, 1.0),
                      np.where(saturated[1], radiance[0], radiance[1]))
    merged = np.maximum(merged, 0.0)

    both = np.any(saturated[0] & saturated[1], axis=(0, 3))
    flags = np.zeros(both.shape, dtype=np.uint8) if low.flags is None else low.flags.copy()
    flags[both] |= int(PixelFlag.SATURATED)
    if np.any(both):
        log.warning("%d pixels saturated in both HDR captures", int(np.count_nonzero(both)))

    metadata = {k: v for k, v in low.metadata.items()
                if k not in ("hdr_scale", "exposure", "intensity")}
    return CaptureStack(merged, low.tags, low.kind, low.params, {**metadata, "hdr_merged": True}, flags)
