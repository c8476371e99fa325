"""
Depth-decoding sweeps.

Classes:
    - DecodingSetup: Everything fixed across one sweep

Functions:
    - binary_patterns(): Binary codes followed by white/black references
    - decoding_error(): Depth error of one noisy capture
    - noise_sweep(): Error against σ for the dispersive rig and its grating-free twin
    - translation_stage_sweep(): Error per stage position of a fronto-parallel plane
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from correspondence.model import CorrespondenceModel
from optics.rig import Rig
from patterns.binary import gen_binary_codes
from patterns.pattern_set import PatternSet, concatenate, reference_set
from reconstruction.depth import DEFAULT_DEPTH_RANGE, reconstruct_depth
from simulation.demo_scenes import random_plane_scene
from simulation.noise import add_noise
from simulation.renderer import render_stack
from simulation.scene import Scene
from simulation.stack import CaptureStack
from spectra.curves import EfficiencySet, ResponseSet
from utils.error_types import UndefinedMetricError
from utils.func import progress_enabled
from utils.metrics import depth_error

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecodingSetup:
    """
    Attributes:
        model: First-order correspondence model used for rendering
        responses: Camera and projector curves
        eta: Diffraction efficiency
        complementary: Use inverse binary patterns
        tau: Decoding threshold
        threshold_mode: "relative" or "absolute"
        min_contrast: Minimum white − black gray level
        depth_range: Triangulation range (mm)
        n_jobs: Worker threads
    """
    model: Optional[CorrespondenceModel]
    responses: ResponseSet
    eta: EfficiencySet
    complementary: bool = False
    tau: float = 0.5
    threshold_mode: str = "relative"
    min_contrast: float = 0.01
    depth_range: Tuple[float, float] = DEFAULT_DEPTH_RANGE
    n_jobs: int = 1


def binary_patterns(resolution: Tuple[int, int], complementary: bool = False) -> PatternSet:
    """K_b binary codes then the white and black references (K_b + 2 frames)."""
    width, height = resolution
    return concatenate("binary", gen_binary_codes(resolution, complementary), reference_set(width, height))


def decoding_error(clean: CaptureStack, scene: Scene, rig: Rig, setup: DecodingSetup,
                   sigma: float, seed: Optional[int]) -> dict:
    """Adds noise to a clean binary stack, decodes it and compares with the scene depth."""
    stack = add_noise(clean, sigma, seed) if sigma > 0 else clean
    depth_map = reconstruct_depth(stack, rig, setup.tau, setup.threshold_mode, setup.min_contrast,
                                  setup.depth_range)
    truth = np.where(scene.valid, scene.depth, np.nan)
    valid_fraction = float(depth_map.valid[scene.valid].mean()) if scene.valid.any() else 0.0
    try:
        error = depth_error(depth_map.depth, truth)
        return {**error.to_dict(), "valid_fraction": valid_fraction}
    except UndefinedMetricError:
        log.warning("No pixel decoded at sigma %.3g, seed %s", sigma, seed)
        return {"mean_abs_mm": np.nan, "median_abs_mm": np.nan, "rmse_mm": np.nan, "count": 0,
                "valid_fraction": valid_fraction}


def noise_sweep(rig: Rig, setup: DecodingSetup, sigmas: Sequence[float], seeds: Sequence[int],
                depth_mm: float = 800.0, shape: Optional[Tuple[int, int]] = None,
                scene: Optional[Scene] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Binary decoding error against noise level.

    Each seed draws a random-reflectance plane (unless `scene` is given) and
    renders it once per rig; noise of every σ is then added to that clean
    stack with the same seed.

    Returns:
        (per-run table, mean over seeds per rig and σ)
    """
    shape = shape or (rig.camera.height, rig.camera.width)
    patterns = binary_patterns((rig.projector.width, rig.projector.height), setup.complementary)
    rigs = (("dispersive", rig), ("conventional", rig.conventional()))
    rows = []
    total = len(seeds) * len(rigs) * len(sigmas)
    with tqdm(total=total, desc="noise sweep", disable=not progress_enabled(), leave=False) as bar:
        for seed in seeds:
            target = scene if scene is not None else random_plane_scene(shape, depth_mm, seed, setup.responses.grid)
            for label, current in rigs:
                clean = render_stack(patterns, target, current, setup.model, setup.responses, setup.eta,
                                     n_jobs=setup.n_jobs)
                for sigma in sigmas:
                    result = decoding_error(clean, target, current, setup, float(sigma), int(seed))
                    rows.append({"rig": label, "sigma": float(sigma), "seed": int(seed), **result})
                    bar.update(1)

    table = pd.DataFrame(rows)
    summary = (table.groupby(["rig", "sigma"], sort=True)[["mean_abs_mm", "median_abs_mm", "valid_fraction"]]
               .mean().reset_index())
    for label, part in summary.groupby("rig"):
        values = part.sort_values("sigma")["mean_abs_mm"].to_numpy()
        if np.any(np.diff(values[np.isfinite(values)]) < 0):
            log.info("Mean depth error of the %s rig is not monotone in sigma", label)
    return table, summary


def translation_stage_sweep(rig: Rig, setup: DecodingSetup, sigmas: Sequence[float], positions: int = 15,
                            step_mm: float = 10.0, start_mm: float = 650.0, seed: int = 0,
                            shape: Optional[Tuple[int, int]] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Absolute-depth protocol: a plane moved along the optical axis.

    Returns:
        (table per position and σ, average over positions per σ)
    """
    shape = shape or (rig.camera.height, rig.camera.width)
    patterns = binary_patterns((rig.projector.width, rig.projector.height), setup.complementary)
    rows = []
    for i in tqdm(range(positions), desc="stage", disable=not progress_enabled(), leave=False):
        depth = start_mm + step_mm * i
        target = random_plane_scene(shape, depth, seed + i, setup.responses.grid)
        clean = render_stack(patterns, target, rig, setup.model, setup.responses, setup.eta, n_jobs=setup.n_jobs)
        for sigma in sigmas:
            result = decoding_error(clean, target, rig, setup, float(sigma), seed + i)
            rows.append({"position": i, "depth_mm": depth, "sigma": float(sigma), **result})
    table = pd.DataFrame(rows)
    summary = table.groupby("sigma", sort=True)[["mean_abs_mm", "median_abs_mm"]].mean().reset_index()
    log.info("Stage sweep over %d positions from %.0f mm", positions, start_mm)
    return table, summary
