"""
Evaluation Metrics

Depth and spectral error measures, probe tables, metamer construction and
the versioned metrics JSON every subcommand writes.

Functions:
    - depth_error(): Mean / median absolute depth error
    - spectral_rmse() / pixel_rmse(): Spectral root-mean-square error
    - spectral_angle(): Mean spectral angle
    - relative_depth(): Median depth separation of two regions
    - probe_spectra(): Per-wavelength table of probe pixels
    - metamer_pair(): Two spectra with identical camera responses
    - write_metrics(): Metrics JSON with the schema tag
"""

import logging
import os
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import null_space

from spectra.curves import ResponseSet
from spectra.grid import WavelengthGrid
from utils.error_types import DomainError, UndefinedMetricError
from utils.persistence import write_json

log = logging.getLogger(__name__)

METRICS_SCHEMA = "dsl-metrics/1"


@dataclass(frozen=True)
class DepthError:
    mean_abs_mm: float
    median_abs_mm: float
    rmse_mm: float
    count: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _mask(shape, *arrays, mask: Optional[np.ndarray] = None) -> np.ndarray:
    valid = np.ones(shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if valid.shape != shape:
        raise DomainError(f"mask shape {valid.shape} does not match {shape}")
    for a in arrays:
        finite = np.isfinite(a)
        valid &= finite if finite.shape == shape else np.all(finite, axis=-1)
    return valid


def depth_error(estimate: np.ndarray, truth: np.ndarray, mask: Optional[np.ndarray] = None) -> DepthError:
    """
    Absolute depth error over pixels finite in both maps (and inside `mask`).

    Raises:
        UndefinedMetricError: No pixel is left to compare
    """
    estimate = np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimate.shape != truth.shape:
        raise DomainError(f"depth maps differ in shape: {estimate.shape} vs {truth.shape}")
    valid = _mask(estimate.shape, estimate, truth, mask=mask)
    if not np.any(valid):
        raise UndefinedMetricError("depth error over an empty mask")
    error = np.abs(estimate[valid] - truth[valid])
    return DepthError(float(error.mean()), float(np.median(error)), float(np.sqrt(np.mean(error ** 2))),
                      int(valid.sum()))


def _cube_pair(estimate, truth, mask):
    estimate = np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimate.shape != truth.shape:
        raise DomainError(f"cubes differ in shape: {estimate.shape} vs {truth.shape}")
    valid = _mask(estimate.shape[:-1], estimate, truth, mask=mask)
    if not np.any(valid):
        raise UndefinedMetricError("spectral metric over an empty mask")
    return estimate[valid], truth[valid]


def pixel_rmse(estimate: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Per-pixel RMSE over wavelength; shape of the cube without its last axis."""
    return np.sqrt(np.mean((np.asarray(estimate) - np.asarray(truth)) ** 2, axis=-1))


def spectral_rmse(estimate: np.ndarray, truth: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    est, gt = _cube_pair(estimate, truth, mask)
    return float(np.sqrt(np.mean((est - gt) ** 2)))


def spectral_angle(estimate: np.ndarray, truth: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    """
    Mean angle in radians between estimated and true spectra.

    Pixels where either spectrum is all zero are left out.
    """
    est, gt = _cube_pair(estimate, truth, mask)
    norms = np.linalg.norm(est, axis=1) * np.linalg.norm(gt, axis=1)
    keep = norms > 0
    if not np.any(keep):
        raise UndefinedMetricError("spectral angle of all-zero spectra")
    cos = np.einsum("nl,nl->n", est[keep], gt[keep]) / norms[keep]
    return float(np.mean(np.arccos(np.clip(cos, -1.0, 1.0))))


def relative_depth(depth: np.ndarray, mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """Median depth of region b minus median depth of region a, in mm."""
    depth = np.asarray(depth, dtype=np.float64)
    a = depth[np.asarray(mask_a, dtype=bool) & np.isfinite(depth)]
    b = depth[np.asarray(mask_b, dtype=bool) & np.isfinite(depth)]
    if a.size == 0 or b.size == 0:
        raise UndefinedMetricError("relative depth needs valid pixels in both regions")
    return float(np.median(b) - np.median(a))


def probe_spectra(cube: np.ndarray, grid: WavelengthGrid, probes: Sequence[Tuple[int, int]],
                  truth: Optional[np.ndarray] = None) -> pd.DataFrame:
    """
    One row per wavelength, columns `est_<x>_<y>` (and `gt_<x>_<y>` when `truth` is given).

    Probes are (column, row) pixels.
    """
    cube = np.asarray(cube)
    height, width = cube.shape[:2]
    table = {"wavelength_nm": grid.wavelengths}
    for x, y in probes:
        x, y = int(x), int(y)
        if not (0 <= x < width and 0 <= y < height):
            raise DomainError(f"probe ({x}, {y}) lies outside the {width}x{height} cube")
        table[f"est_{x}_{y}"] = cube[y, x]
        if truth is not None:
            table[f"gt_{x}_{y}"] = np.asarray(truth)[y, x]
    return pd.DataFrame(table)


def metamer_pair(base: np.ndarray, responses: ResponseSet, max_value: float = 1.5,
                 max_change: float = 0.5) -> Tuple[np.ndarray, np.ndarray]:
    """
    Builds H₂ = H₁ + t·b with b in the null space of the white-lit camera responses.

    b is the null-space projection of a smooth probe curve, so H₂ stays smooth.
    t is the largest step keeping H₂ inside [0, max_value], capped so that
    max |t·b| ≤ max_change.

    Returns:
        (H₁, H₂)
    """
    H1 = np.asarray(base, dtype=np.float64)
    grid = responses.grid
    if H1.shape != (grid.count,):
        raise DomainError("base spectrum must be sampled on the response grid")
    system = responses.cam_matrix * responses.proj_total[None]
    basis = null_space(system)
    if basis.shape[1] == 0:
        raise DomainError("camera responses leave no metameric freedom")
    w = grid.wavelengths
    probe = np.sin(2.0 * np.pi * (w - w[0]) / max(w[-1] - w[0], 1.0) * 1.5)
    b = basis @ (basis.T @ probe)
    peak = float(np.max(np.abs(b)))
    if peak <= 1e-12:
        b = basis[:, 0]
        peak = float(np.max(np.abs(b)))
    b = b / peak
    with np.errstate(divide="ignore"):
        up = np.where(b > 0, (max_value - H1) / b, np.inf)
        down = np.where(b < 0, H1 / -b, np.inf)
    t = float(min(np.min(up), np.min(down), max_change))
    if t <= 0:
        log.warning("Base spectrum sits on the bounds; metamer equals the base")
        t = 0.0
    return H1, np.clip(H1 + t * b, 0.0, max_value)


def write_metrics(directory: str, command: str, values: Dict[str, Any],
                  name: str = "metrics.json") -> str:
    """Writes `{"schema", "command", ...values}` with sorted keys; returns the path."""
    path = os.path.join(directory, name)
    payload = {"schema": METRICS_SCHEMA, "command": command}
    payload.update(_plain(values))
    write_json(path, payload)
    return path


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value
