"""
Diffraction efficiency from bandpass comb captures.

Each order's expected image is rendered with unit efficiency from the
known target geometry. Pixels lit by exactly one order give that order's
intensity ratio I/P; dividing by the zero-order ratio at the same filter
yields η_m relative to η_0.

Functions:
    - order_predictions(): Unit-efficiency images per order for one pattern
    - order_ratios(): Observed/predicted ratio per order for one capture
    - estimate_eta(): EfficiencySet on the response grid
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from calibration.bandpass import CalibrationCapture, filtered_responses, flat_target
from correspondence.model import CorrespondenceModel
from optics.rig import Rig
from patterns.pattern_set import PatternSet
from simulation.renderer import Illumination, prepare_illumination, spectral_illumination
from spectra.curves import EfficiencySet, ResponseSet, flat_efficiency
from spectra.grid import SpectralCurve
from utils.error_types import DomainError, PixelFlag, UndefinedMetricError

log = logging.getLogger(__name__)

# pixels whose other orders predict less than this fraction of the order's peak
EXCLUSIVE_FRACTION = 1e-9
MIN_FRACTION = 0.05


@dataclass(frozen=True)
class EtaEstimate:
    """
    Attributes:
        eta: Zero-order normalized efficiency on the response grid
        table: One row per (filter, order): center, ratio, eta, pixel count
    """
    eta: EfficiencySet
    table: pd.DataFrame = field(repr=False)


def order_predictions(pattern, illumination: Illumination) -> Dict[int, np.ndarray]:
    """Gray images each order would produce at unit efficiency, per traced pixel."""
    responses = illumination.responses
    cam, proj = responses.cam_matrix, responses.proj_matrix
    geometry = illumination.geometry
    zeros = np.zeros(responses.grid.count)
    ones = np.ones(responses.grid.count)
    out = {}
    for m in (0, *geometry.orders):
        eta = {0: ones} if m == 0 else {0: zeros, m: ones}
        light = spectral_illumination(pattern, geometry, eta, proj)
        out[m] = ((illumination.reflectance * light) @ cam.T).sum(axis=1)
    return out


def order_ratios(capture_stack, patterns: PatternSet, illumination: Illumination) -> Dict[int, tuple]:
    """
    Returns:
        Order → (observed sum, predicted sum, pixel count) over exclusive pixels of every frame
    """
    frames = capture_stack.frames.reshape(len(capture_stack), -1, 3)[:, illumination.index].sum(axis=2)
    scale = capture_stack.exposure_scale
    inside = (illumination.flags.ravel()[illumination.index] & PixelFlag.OUT_OF_HULL) == 0
    totals: Dict[int, List[float]] = {}
    for f, pattern in enumerate(patterns):
        predicted = order_predictions(pattern, illumination)
        for m, values in predicted.items():
            peak = float(values.max()) if values.size else 0.0
            if peak <= 0:
                continue
            others = sum(v for o, v in predicted.items() if o != m)
            exclusive = inside & (values >= MIN_FRACTION * peak) & (others <= EXCLUSIVE_FRACTION * peak)
            acc = totals.setdefault(m, [0.0, 0.0, 0])
            acc[0] += float(frames[f, exclusive].sum())
            acc[1] += scale * float(values[exclusive].sum())
            acc[2] += int(exclusive.sum())
    return {m: tuple(v) for m, v in totals.items()}


def estimate_eta(capture: CalibrationCapture, patterns: PatternSet, rig: Rig,
                 model: Optional[CorrespondenceModel], responses: ResponseSet,
                 orders: Sequence[int] = (-1, 1), n_jobs: int = 1) -> EtaEstimate:
    """
    Estimates η_m(λ) / η_0(λ) at every filter center, then interpolates.

    Args:
        capture: Comb captures of the flat target through each filter
        patterns: The comb patterns that were projected
        rig: The rig
        model: First-order correspondence model
        responses: Unfiltered camera and projector curves
        orders: First orders to calibrate
        n_jobs: Worker threads

    Returns:
        EtaEstimate; orders never seen in isolation are listed as uncalibrated

    Raises:
        UndefinedMetricError: zero-order intensity vanishes at a filter
    """
    grid = responses.grid
    scene = flat_target((rig.camera.height, rig.camera.width), capture.depth_mm, grid,
                        capture.target_reflectance)
    unit = flat_efficiency(grid, 1.0, 1.0, (0, *orders))

    rows = []
    for stack, bandpass in zip(capture.stacks, capture.filters):
        if len(stack) != len(patterns):
            raise DomainError(f"capture at {bandpass.center_nm} nm has {len(stack)} frames, "
                              f"expected {len(patterns)}")
        illumination = prepare_illumination(scene, rig, model, filtered_responses(responses, bandpass), unit,
                                            orders, n_jobs)
        ratios = order_ratios(stack, patterns, illumination)
        observed0, predicted0, count0 = ratios.get(0, (0.0, 0.0, 0))
        if count0 == 0 or observed0 <= 0 or predicted0 <= 0:
            raise UndefinedMetricError(f"zero-order intensity vanishes at {bandpass.center_nm} nm")
        r0 = observed0 / predicted0
        for m in orders:
            observed, predicted, count = ratios.get(m, (0.0, 0.0, 0))
            value = observed / predicted / r0 if count and predicted > 0 else np.nan
            rows.append({"center_nm": bandpass.center_nm, "m": m, "ratio": observed / predicted if count else np.nan,
                         "eta": value, "pixels": count})
        rows.append({"center_nm": bandpass.center_nm, "m": 0, "ratio": r0, "eta": 1.0, "pixels": count0})
        log.debug("Filter %.0f nm: zero-order ratio %.4g over %d pixels", bandpass.center_nm, r0, count0)

    table = pd.DataFrame(rows, columns=["center_nm", "m", "ratio", "eta", "pixels"])
    table = table.sort_values(["m", "center_nm"]).reset_index(drop=True)

    eta = {0: SpectralCurve.constant(grid, 1.0)}
    uncalibrated = []
    for m in orders:
        part = table[(table["m"] == m) & table["eta"].notna()]
        if part.empty:
            log.warning("Order %+d was never isolated; marking it uncalibrated", m)
            uncalibrated.append(m)
            continue
        values = np.interp(grid.wavelengths, part["center_nm"].to_numpy(float), part["eta"].to_numpy(float))
        eta[m] = SpectralCurve(grid, np.clip(values, 0.0, 1.5), True)
    log.info("Estimated efficiency for orders %s from %d filters", sorted(m for m in eta if m), len(capture))
    return EtaEstimate(EfficiencySet(eta, tuple(uncalibrated)), table)
