"""
Bandpass calibration captures.

A 10 nm boxcar filter in front of the projector turns every pattern into a
narrow-band one. Captures are taken of a flat diffuse target.

Classes:
    - BandpassFilter: Boxcar filter
    - CalibrationCapture: Stacks per filter plus the target description

Functions:
    - filtered_responses(): Projector emission seen through a filter
    - flat_target(): Fronto-parallel target scene
    - simulate_capture(): Render a pattern set through each filter
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from correspondence.model import CorrespondenceModel
from optics.rig import Rig
from patterns.pattern_set import PatternSet
from simulation.demo_scenes import boxcar
from simulation.noise import add_noise
from simulation.renderer import render_stack
from simulation.scene import Scene
from simulation.stack import CaptureStack
from spectra.curves import EfficiencySet, ResponseSet
from spectra.grid import WavelengthGrid
from utils.error_types import DomainError

log = logging.getLogger(__name__)

TARGET_REFLECTANCE = 0.99
ETA_FILTER_CENTERS = tuple(float(c) for c in range(430, 661, 10))


@dataclass(frozen=True)
class BandpassFilter:
    center_nm: float
    width_nm: float = 10.0

    def transmission(self, grid: WavelengthGrid) -> np.ndarray:
        return boxcar(grid, self.center_nm, self.width_nm)


@dataclass(frozen=True)
class CalibrationCapture:
    """
    Attributes:
        stacks: One capture stack per filter
        filters: Filter of each stack
        depth_mm: Target plane depth
        target_reflectance: Flat reflectance of the target
    """
    stacks: Tuple[CaptureStack, ...] = field(repr=False)
    filters: Tuple[BandpassFilter, ...]
    depth_mm: float
    target_reflectance: float = TARGET_REFLECTANCE

    def __post_init__(self):
        if len(self.stacks) != len(self.filters):
            raise DomainError("one stack per filter is required")
        if not 0 < self.target_reflectance <= 1:
            raise DomainError("target reflectance must lie in (0, 1]")
        if self.depth_mm <= 0:
            raise DomainError("target depth must be positive")

    def __len__(self) -> int:
        return len(self.filters)


def filtered_responses(responses: ResponseSet, bandpass: BandpassFilter) -> ResponseSet:
    grid = responses.grid
    if not grid.contains(bandpass.center_nm):
        raise DomainError(f"filter center {bandpass.center_nm} nm lies outside the grid")
    transmission = bandpass.transmission(grid)
    return ResponseSet.from_matrices(grid, responses.cam_matrix, responses.proj_matrix * transmission[None])


def flat_target(shape: Tuple[int, int], depth_mm: float, grid: WavelengthGrid,
                reflectance: float = TARGET_REFLECTANCE) -> Scene:
    return Scene(np.full(shape, float(depth_mm)), np.full((*shape, grid.count), reflectance), grid, "target")


def simulate_capture(patterns: PatternSet, rig: Rig, model: CorrespondenceModel, responses: ResponseSet,
                     eta: EfficiencySet, centers: Sequence[float], depth_mm: float,
                     width_nm: float = 10.0, reflectance: float = TARGET_REFLECTANCE,
                     sigma: float = 0.0, seed: Optional[int] = 0, n_jobs: int = 1) -> CalibrationCapture:
    """
    Renders `patterns` on a flat target once per bandpass filter.

    Args:
        patterns: Pattern set projected through each filter
        rig: The rig
        model: First-order correspondence model
        responses: Unfiltered camera and projector curves
        eta: Diffraction efficiency
        centers: Filter centers in nm
        depth_mm: Target depth
        width_nm: Filter width
        reflectance: Target reflectance
        sigma: Noise level
        seed: Root seed; filter i uses seed + i
        n_jobs: Worker threads
    """
    scene = flat_target((rig.camera.height, rig.camera.width), depth_mm, responses.grid, reflectance)
    stacks: List[CaptureStack] = []
    filters = tuple(BandpassFilter(float(c), width_nm) for c in centers)
    for i, bandpass in enumerate(filters):
        stack = render_stack(patterns, scene, rig, model, filtered_responses(responses, bandpass), eta,
                             n_jobs=n_jobs)
        stack = stack.with_frames(stack.frames, filter_nm=bandpass.center_nm, filter_width_nm=width_nm,
                                  depth_mm=float(depth_mm))
        if sigma > 0:
            stack = add_noise(stack, sigma, None if seed is None else seed + i)
        stacks.append(stack)
    log.info("Simulated %d bandpass captures at %.0f mm", len(stacks), depth_mm)
    return CalibrationCapture(tuple(stacks), filters, float(depth_mm), reflectance)
