"""
Correspondence samples: exact first-order columns at lattice nodes.

Samples travel as tables with the columns px, py, z_mm, m, lambda_nm, q_col
and as dense arrays shaped (orders, ny, nx, wavelengths, depths).
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from correspondence.model import CorrespondenceGrids, CorrespondenceModel, build_model
from optics.grating_solver import solve_grating_points
from optics.rig import Rig
from utils.codecs.tables import SAMPLE_COLUMNS
from utils.error_types import DomainError
from utils.func import progress_enabled

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorrespondenceSample:
    """One observed (pixel, depth, order, wavelength) → projector column pairing."""
    px: float
    py: float
    z_mm: float
    m: int
    lambda_nm: float
    q_col: float

    def __post_init__(self):
        if self.m not in (-1, 1):
            raise DomainError(f"samples are first-order only, got m={self.m}")
        if self.z_mm <= 0:
            raise DomainError("sample depth must be positive")


def sample_correspondence_oracle(rig: Rig, grids: CorrespondenceGrids,
                                 orders: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Exact first-order columns at every lattice node, wavelength and depth.

    Columns may fall outside the projector; they are still geometric
    solutions and keep the fit well conditioned near the image edges.
    Points without a propagating path are NaN.

    Returns:
        Array of shape (orders, ny, nx, wavelengths, depths)
    """
    orders = tuple(orders if orders is not None else rig.grating.first_orders)
    nodes = grids.node_pixels.reshape(-1, 2)
    n_nodes, n_lam, n_z = nodes.shape[0], len(grids.wavelengths), len(grids.depths)

    # (node, wavelength, depth) flattened into one batched solve per order
    P = np.repeat(nodes, n_lam * n_z, axis=0)
    lam = np.tile(np.repeat(np.asarray(grids.wavelengths), n_z), n_nodes)
    Z = np.tile(np.asarray(grids.depths), n_nodes * n_lam)
    points = rig.camera.unproject_many(P, Z)

    out = np.full((len(orders), n_nodes * n_lam * n_z), np.nan)
    for oi in tqdm(range(len(orders)), desc="oracle", disable=not progress_enabled(), leave=False):
        out[oi] = solve_grating_points(points, rig, orders[oi], lam).q[:, 0]

    missing = int(np.sum(~np.isfinite(out)))
    if missing:
        log.warning("%d oracle samples have no propagating solution", missing)
    return out.reshape(len(orders), grids.ny, grids.nx, n_lam, n_z)


def samples_to_frame(grids: CorrespondenceGrids, orders: Sequence[int], samples: np.ndarray) -> pd.DataFrame:
    """Dense sample array → long table, missing samples dropped."""
    O, Y, X, L, Z = np.meshgrid(
        np.asarray(orders), grids.ys, grids.xs,
        np.asarray(grids.wavelengths), np.asarray(grids.depths), indexing="ij")
    frame = pd.DataFrame({
        "px": X.ravel(), "py": Y.ravel(), "z_mm": Z.ravel(),
        "m": O.ravel().astype(int), "lambda_nm": L.ravel(), "q_col": np.asarray(samples).ravel(),
    })
    return frame.dropna(subset=["q_col"]).reset_index(drop=True)


def samples_from_list(samples: Sequence[CorrespondenceSample]) -> pd.DataFrame:
    return pd.DataFrame([vars(s) for s in samples], columns=SAMPLE_COLUMNS)


def frame_to_samples(frame: pd.DataFrame, grids: CorrespondenceGrids,
                     orders: Sequence[int]) -> np.ndarray:
    """
    Long table → dense sample array on `grids`.

    Rows off the lattice, wavelength knots or depth list are dropped with a
    warning. Repeated rows for one cell are averaged.
    """
    missing = [c for c in SAMPLE_COLUMNS if c not in frame.columns]
    if missing:
        raise DomainError(f"sample table lacks columns {missing}")

    ix = (frame["px"].to_numpy(float) - grids.x0) / grids.dx
    iy = (frame["py"].to_numpy(float) - grids.y0) / grids.dy
    knots = np.asarray(grids.wavelengths)
    depths = np.asarray(grids.depths)
    il = np.array([_match(knots, v) for v in frame["lambda_nm"].to_numpy(float)])
    iz = np.array([_match(depths, v) for v in frame["z_mm"].to_numpy(float)])
    order_list = list(orders)
    io = np.array([order_list.index(m) if m in order_list else -1 for m in frame["m"].to_numpy(int)])

    on_lattice = (np.abs(ix - np.round(ix)) < 1e-6) & (np.abs(iy - np.round(iy)) < 1e-6)
    ix_i, iy_i = np.round(ix).astype(int), np.round(iy).astype(int)
    keep = (on_lattice & (ix_i >= 0) & (ix_i < grids.nx) & (iy_i >= 0) & (iy_i < grids.ny)
            & (il >= 0) & (iz >= 0) & (io >= 0))
    if not np.all(keep):
        log.warning("Dropping %d sample rows that do not sit on the model grids", int(np.sum(~keep)))

    keyed = pd.DataFrame({
        "o": io[keep], "y": iy_i[keep], "x": ix_i[keep], "l": il[keep], "z": iz[keep],
        "q": frame["q_col"].to_numpy(float)[keep],
    }).groupby(["o", "y", "x", "l", "z"], sort=True)["q"].mean().reset_index()

    out = np.full((len(order_list), grids.ny, grids.nx, knots.size, depths.size), np.nan)
    out[keyed["o"], keyed["y"], keyed["x"], keyed["l"], keyed["z"]] = keyed["q"].to_numpy()
    return out


def _match(values: np.ndarray, v: float, tol: float = 1e-6) -> int:
    hits = np.flatnonzero(np.abs(values - v) < tol)
    return int(hits[0]) if hits.size else -1


def frame_rows(frame: pd.DataFrame) -> List[CorrespondenceSample]:
    return [CorrespondenceSample(float(r.px), float(r.py), float(r.z_mm), int(r.m),
                                 float(r.lambda_nm), float(r.q_col))
            for r in frame.itertuples(index=False)]


def fit_oracle_model(rig: Rig, grids: CorrespondenceGrids, orders: Optional[Sequence[int]] = None,
                     n_jobs: int = 1) -> CorrespondenceModel:
    """Samples the exact grating solve on `grids` and fits the power-law model to it."""
    orders = tuple(orders if orders is not None else rig.grating.first_orders)
    samples = sample_correspondence_oracle(rig, grids, orders)
    return build_model(grids, samples, orders, rig.projector.width, n_jobs)
