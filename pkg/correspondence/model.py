"""
Data-driven first-order correspondence model.

Projector columns are sampled on a camera-pixel lattice for a few
wavelengths and depths, each (node, wavelength, order) series is fitted with
a power law in depth, and queries combine Keys cubic interpolation across the
lattice with linear interpolation across wavelength.

Classes:
    - CorrespondenceGrids: Sample lattice, wavelength knots and depths
    - CorrespondenceModel: Fitted coefficients, stored samples and optional LUT

Functions:
    - build_model(): Fits a model from sampled columns
    - build_lut(): Tabulates node columns over depth
    - query() / query_many(): Projector column for (pixel, depth, order, wavelength)
    - columns_on_grid(): First-order columns for every grid wavelength
    - valid_orders() / valid_order_mask(): First orders that stay inside the projector
    - validate(): Surrogate error against the exact grating solve
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from correspondence.power_law import evaluate_power_law, fit_power_law_batch
from correspondence.zero_order import zero_order_many
from optics.grating_solver import solve_grating_points
from optics.pinhole import PinholeModel
from optics.rig import Rig
from spectra.grid import WavelengthGrid
from utils.error_types import CorrespondenceRangeError, DomainError, PixelFlag
from utils.workers import concat, run_chunked

log = logging.getLogger(__name__)

DEFAULT_WAVELENGTHS = (430.0, 600.0, 610.0, 620.0, 640.0, 650.0, 660.0)
DEFAULT_DEPTHS = (500.0, 625.0, 750.0, 875.0, 1000.0)
DEPTH_MARGIN_FRACTION = 0.1
KEYS_A = -0.5


def _axis_nodes(size: int, requested: int) -> Tuple[float, float, int]:
    # integer spacing, centered; one spacing of margin covers the leftovers
    if requested < 2:
        raise DomainError("the sample lattice needs at least two nodes per axis")
    step = max(1, (size - 1) // (requested - 1))
    count = (size - 1) // step + 1
    start = ((size - 1) - step * (count - 1)) // 2
    return float(start), float(step), int(count)


@dataclass(frozen=True)
class CorrespondenceGrids:
    """
    Sampling grids of the model.

    Attributes:
        x0, dx, nx: Lattice columns x0 + dx·i
        y0, dy, ny: Lattice rows y0 + dy·j
        wavelengths: Wavelength knots (nm), ascending
        depths: Sample depths (mm), ascending
    """
    x0: float
    dx: float
    nx: int
    y0: float
    dy: float
    ny: int
    wavelengths: Tuple[float, ...] = DEFAULT_WAVELENGTHS
    depths: Tuple[float, ...] = DEFAULT_DEPTHS

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2 or self.dx <= 0 or self.dy <= 0:
            raise DomainError("lattice needs positive spacing and two nodes per axis")
        wl = tuple(float(w) for w in self.wavelengths)
        depths = tuple(float(z) for z in self.depths)
        if len(wl) < 2 or np.any(np.diff(wl) <= 0):
            raise DomainError("wavelength knots must be ascending, at least two")
        if len(depths) < 4 or np.any(np.diff(depths) <= 0) or depths[0] <= 0:
            raise DomainError("need at least four distinct positive sample depths")
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "depths", depths)

    @classmethod
    def for_camera(cls, camera: PinholeModel, rows: int = 48, cols: int = 85,
                   wavelengths: Sequence[float] = DEFAULT_WAVELENGTHS,
                   depths: Sequence[float] = DEFAULT_DEPTHS) -> "CorrespondenceGrids":
        """
        Lattice with integer node pixels spanning the camera image.

        Node spacing is the largest integer giving at least the requested count,
        so the actual count may exceed it.
        """
        x0, dx, nx = _axis_nodes(camera.width, cols)
        y0, dy, ny = _axis_nodes(camera.height, rows)
        return cls(x0, dx, nx, y0, dy, ny, tuple(wavelengths), tuple(depths))

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.ny)

    @property
    def node_pixels(self) -> np.ndarray:
        """(ny, nx, 2) lattice pixels as (column, row)."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.stack([X, Y], axis=-1)

    @property
    def depth_range(self) -> Tuple[float, float]:
        return self.depths[0], self.depths[-1]

    @property
    def depth_margin(self) -> float:
        lo, hi = self.depth_range
        return DEPTH_MARGIN_FRACTION * (hi - lo)

    def to_dict(self) -> dict:
        return {
            "x0": self.x0, "dx": self.dx, "nx": self.nx,
            "y0": self.y0, "dy": self.dy, "ny": self.ny,
            "wavelengths": list(self.wavelengths), "depths": list(self.depths),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorrespondenceGrids":
        return cls(float(data["x0"]), float(data["dx"]), int(data["nx"]),
                   float(data["y0"]), float(data["dy"]), int(data["ny"]),
                   tuple(data["wavelengths"]), tuple(data["depths"]))


@dataclass(frozen=True)
class CorrespondenceModel:
    """
    Fitted first-order correspondence.

    Array axes are (order, row node, column node, wavelength knot, ...).

    Attributes:
        grids: Sampling grids
        orders: First orders covered, e.g. (-1, 1)
        projector_width: Projector width in pixels
        coefficients: (α, β, γ) per node, last axis of size 3
        rms: Fit residual per node
        samples: Sampled columns per node and depth
        lut: Optional node columns tabulated over `lut_depths`
        lut_depths: Depths of the LUT axis (mm)
    """
    grids: CorrespondenceGrids
    orders: Tuple[int, ...]
    projector_width: int
    coefficients: np.ndarray = field(repr=False)
    rms: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    lut: Optional[np.ndarray] = field(default=None, repr=False)
    lut_depths: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        g = self.grids
        shape = (len(self.orders), g.ny, g.nx, len(g.wavelengths))
        if any(m not in (-1, 1) for m in self.orders):
            raise DomainError("the correspondence model covers first orders only")
        if self.coefficients.shape != shape + (3,) or self.rms.shape != shape:
            raise DomainError(f"coefficient arrays do not match grids {shape}")
        if self.samples.shape != shape + (len(g.depths),):
            raise DomainError("sample array does not match grids")
        for name in ("coefficients", "rms", "samples", "lut", "lut_depths"):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value, dtype=np.float64)
                value.setflags(write=False)
                object.__setattr__(self, name, value)

    def order_index(self, m: int) -> int:
        if m == 0:
            raise DomainError("zero order is served by zero_order(), not the model")
        if m not in self.orders:
            raise DomainError(f"order {m} is not in the model (orders {self.orders})")
        return self.orders.index(m)

    @property
    def has_lut(self) -> bool:
        return self.lut is not None

    def without_lut(self) -> "CorrespondenceModel":
        return replace(self, lut=None, lut_depths=None)


def build_model(grids: CorrespondenceGrids, samples: np.ndarray, orders: Sequence[int],
                projector_width: int, n_jobs: int = 1) -> CorrespondenceModel:
    """
    Fits a power law to every (order, node, wavelength) depth series.

    Args:
        grids: Sampling grids
        samples: Columns, shape (orders, ny, nx, wavelengths, depths); NaN marks missing
        orders: First orders matching the leading axis
        projector_width: Projector width in pixels
        n_jobs: Worker threads

    Returns:
        CorrespondenceModel
    """
    samples = np.asarray(samples, dtype=np.float64)
    head = samples.shape[:-1]
    flat = samples.reshape(-1, samples.shape[-1])
    z = np.asarray(grids.depths)

    def fit_chunk(start, stop):
        coefficients, rms, _ = fit_power_law_batch(z, flat[start:stop])
        return coefficients, rms

    parts = run_chunked(fit_chunk, flat.shape[0], n_jobs, chunk=2048)
    coefficients = concat([p[0] for p in parts]).reshape(head + (3,))
    rms = concat([p[1] for p in parts]).reshape(head)
    failed = int(np.sum(~np.isfinite(rms)))
    if failed:
        log.warning("%d of %d sample series could not be fitted", failed, rms.size)
    log.info("Fitted %d power laws (median rms %.2e px)", rms.size, float(np.nanmedian(rms)))
    return CorrespondenceModel(grids, tuple(int(m) for m in orders), int(projector_width),
                               coefficients, rms, samples)


def build_lut(model: CorrespondenceModel, depth_step_mm: float = 1.0) -> CorrespondenceModel:
    """
    Tabulates node columns over depth, covering the hull plus its margin.

    Queries on the returned model interpolate the table linearly in depth.
    """
    if depth_step_mm <= 0:
        raise DomainError("LUT depth step must be positive")
    lo, hi = model.grids.depth_range
    margin = model.grids.depth_margin
    depths = np.arange(lo - margin, hi + margin + 0.5 * depth_step_mm, depth_step_mm)
    C = model.coefficients
    lut = evaluate_power_law(C[..., 0, None], C[..., 1, None], C[..., 2, None], depths)
    log.debug("Built LUT with %d depth steps (%.1f MB)", depths.size, lut.nbytes / 2 ** 20)
    return replace(model, lut=lut, lut_depths=depths)


def _keys_weights(t: np.ndarray) -> np.ndarray:
    """Keys cubic weights for the stencil (-1, 0, 1, 2) at fractional offset t."""
    d = np.abs(np.stack([1.0 + t, t, 1.0 - t, 2.0 - t], axis=-1))
    a = KEYS_A
    near = (a + 2.0) * d ** 3 - (a + 3.0) * d ** 2 + 1.0
    far = a * d ** 3 - 5.0 * a * d ** 2 + 8.0 * a * d - 4.0 * a
    return np.where(d <= 1.0, near, np.where(d < 2.0, far, 0.0))


def _stencil(u: np.ndarray, n: int):
    uc = np.clip(u, 0.0, n - 1.0)
    i = np.clip(np.floor(uc).astype(np.int64), 0, n - 2)
    t = uc - i
    idx = np.clip(i[:, None] + np.arange(-1, 3), 0, n - 1)
    return idx, _keys_weights(t), u - uc


def _gather_columns(model: CorrespondenceModel, o: int, iy, ix, jl, z) -> np.ndarray:
    """Node columns at depth z, shape (n, 4, 4, 2)."""
    Y = iy[:, :, None, None]
    X = ix[:, None, :, None]
    J = jl[:, None, None, :]
    zz = z[:, None, None, None]
    if model.lut is not None:
        D = model.lut_depths
        step = D[1] - D[0]
        k = np.clip((z - D[0]) / step, 0.0, D.size - 1.0)
        k0 = np.clip(np.floor(k).astype(np.int64), 0, D.size - 2)
        t = (k - k0)[:, None, None, None]
        K0 = k0[:, None, None, None]
        table = model.lut[o]
        return (1.0 - t) * table[Y, X, J, K0] + t * table[Y, X, J, K0 + 1]
    c = model.coefficients[o][Y, X, J]
    return evaluate_power_law(c[..., 0], c[..., 1], c[..., 2], zz)


def query_many(model: CorrespondenceModel, pixels: np.ndarray, z: np.ndarray, m: int,
               wavelength_nm, strict: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized first-order query.

    Inside the hull values are interpolated. Within the margin (one lattice
    spacing, a tenth of the depth range) they are extrapolated and flagged
    OUT_OF_HULL. Beyond it they are NaN and flagged, or raise when strict.

    Args:
        model: Correspondence model
        pixels: Camera pixels (column, row), shape (n, 2)
        z: Depths (mm), shape (n,)
        m: Order, -1 or 1
        wavelength_nm: Scalar or (n,) wavelengths
        strict: Raise CorrespondenceRangeError beyond the margin

    Returns:
        (columns (n,), flags (n,) uint8)
    """
    o = model.order_index(m)
    g = model.grids
    p = np.atleast_2d(np.asarray(pixels, dtype=np.float64))
    n = p.shape[0]
    z = np.broadcast_to(np.asarray(z, dtype=np.float64), (n,))
    lam = np.broadcast_to(np.asarray(wavelength_nm, dtype=np.float64), (n,))
    if np.any(z <= 0):
        raise DomainError("depth must be positive")

    u = (p[:, 0] - g.x0) / g.dx
    v = (p[:, 1] - g.y0) / g.dy
    z_lo, z_hi = g.depth_range
    margin = g.depth_margin
    knots = np.asarray(g.wavelengths)
    tol = 1e-9

    inside = ((u >= -tol) & (u <= g.nx - 1 + tol) & (v >= -tol) & (v <= g.ny - 1 + tol)
              & (z >= z_lo - tol) & (z <= z_hi + tol))
    within_margin = ((u >= -1 - tol) & (u <= g.nx + tol) & (v >= -1 - tol) & (v <= g.ny + tol)
                     & (z >= z_lo - margin - tol) & (z <= z_hi + margin + tol))
    lam_ok = (lam >= knots[0] - tol) & (lam <= knots[-1] + tol)
    usable = within_margin & lam_ok & np.isfinite(u) & np.isfinite(v)

    if strict and not np.all(usable):
        bad = int(np.flatnonzero(~usable)[0])
        raise CorrespondenceRangeError(
            f"query (p={tuple(p[bad])}, z={z[bad]}, λ={lam[bad]}) is outside the model hull")

    iy, wy, ey = _stencil(np.where(usable, v, 0.0), g.ny)
    ix, wx, ex = _stencil(np.where(usable, u, 0.0), g.nx)
    lc = np.clip(lam, knots[0], knots[-1])
    j = np.clip(np.searchsorted(knots, lc, side="right") - 1, 0, knots.size - 2)
    tl = (lc - knots[j]) / (knots[j + 1] - knots[j])
    jl = np.stack([j, j + 1], axis=-1)

    G = _gather_columns(model, o, iy, ix, jl, np.where(usable, z, z_lo))
    wl = np.stack([1.0 - tl, tl], axis=-1)
    per_knot = np.einsum("ny,nx,nyxk->nk", wy, wx, G)
    slope_x = np.einsum("ny,nyk->nk", wy, G[:, :, 2, :] - G[:, :, 1, :])
    slope_y = np.einsum("nx,nxk->nk", wx, G[:, 2, :, :] - G[:, 1, :, :])
    per_knot = per_knot + ex[:, None] * slope_x + ey[:, None] * slope_y
    q = np.einsum("nk,nk->n", wl, per_knot)

    flags = np.where(inside & lam_ok, PixelFlag.OK, PixelFlag.OUT_OF_HULL).astype(np.uint8)
    q = np.where(usable, q, np.nan)
    return q, flags


def query(p, z: float, m: int, wavelength_nm: float, model: CorrespondenceModel) -> float:
    """
    Projector column lit by order m at wavelength λ for camera pixel p at depth z.

    Raises:
        DomainError: m = 0 or an order absent from the model
        CorrespondenceRangeError: Query beyond the hull margin
    """
    q, _ = query_many(model, np.asarray(p, dtype=np.float64)[None], np.asarray([z]), m,
                      wavelength_nm, strict=True)
    return float(q[0])


def knot_columns(model: CorrespondenceModel, pixels: np.ndarray, z: np.ndarray, m: int) -> np.ndarray:
    """Columns at every wavelength knot, shape (n, knots)."""
    cols = [query_many(model, pixels, z, m, lam)[0] for lam in model.grids.wavelengths]
    return np.stack(cols, axis=-1)


def columns_on_grid(model: CorrespondenceModel, pixels: np.ndarray, z: np.ndarray, m: int,
                    grid: WavelengthGrid) -> np.ndarray:
    """
    First-order columns for every grid wavelength, shape (n, N).

    Evaluates the knots once and interpolates linearly, which equals querying
    every wavelength. Grid wavelengths outside the knots give NaN.
    """
    knots = np.asarray(model.grids.wavelengths)
    K = knot_columns(model, pixels, z, m)
    lam = grid.wavelengths
    j = np.clip(np.searchsorted(knots, lam, side="right") - 1, 0, knots.size - 2)
    t = (np.clip(lam, knots[0], knots[-1]) - knots[j]) / (knots[j + 1] - knots[j])
    cols = K[:, j] * (1.0 - t) + K[:, j + 1] * t
    outside = (lam < knots[0] - 1e-9) | (lam > knots[-1] + 1e-9)
    cols[:, outside] = np.nan
    return cols


def valid_order_mask(pixels: np.ndarray, z: np.ndarray, model: CorrespondenceModel, rig: Rig,
                     grid: WavelengthGrid) -> Dict[int, np.ndarray]:
    """
    Per-order validity for many pixels.

    Order m is valid when every grid wavelength lands on a projector column
    and all of them lie on the correct side of the zero-order column: below
    it for m = -1, above it for m = +1.
    """
    pixels = np.atleast_2d(np.asarray(pixels, dtype=np.float64))
    z = np.broadcast_to(np.asarray(z, dtype=np.float64), (pixels.shape[0],))
    zero_col = zero_order_many(pixels, z, rig)[:, 0]
    masks = {}
    for m in (-1, 1):
        if m not in model.orders or m not in rig.grating.orders:
            masks[m] = np.zeros(pixels.shape[0], dtype=bool)
            continue
        cols = columns_on_grid(model, pixels, z, m, grid)
        masks[m] = order_validity(cols, zero_col, m, model.projector_width)
    return masks


def order_validity(cols: np.ndarray, zero_col: np.ndarray, m: int, projector_width: int) -> np.ndarray:
    """
    Rows of `cols` (n, N) whose every column is a projector column on the
    correct side of `zero_col` (n,).
    """
    nearest = np.floor(cols + 0.5)
    with np.errstate(invalid="ignore"):
        inside = np.all(np.isfinite(cols) & (nearest >= 0) & (nearest < projector_width), axis=1)
        side = cols < zero_col[:, None] if m < 0 else cols > zero_col[:, None]
    return inside & np.all(side, axis=1) & np.isfinite(zero_col)


def valid_orders(p, z: float, model: CorrespondenceModel, rig: Rig,
                 grid: WavelengthGrid) -> Tuple[int, ...]:
    """First orders valid at pixel p and depth z (may be empty)."""
    masks = valid_order_mask(np.asarray(p, dtype=np.float64)[None], np.asarray([z]), model, rig, grid)
    return tuple(m for m in (-1, 1) if masks[m][0])


@dataclass(frozen=True)
class ValidationReport:
    mean_error: float
    max_error: float
    count: int
    per_order: Dict[int, Tuple[float, float]]

    def to_dict(self) -> dict:
        return {
            "mean_px": self.mean_error,
            "max_px": self.max_error,
            "count": self.count,
            "per_order": {str(m): {"mean_px": a, "max_px": b} for m, (a, b) in self.per_order.items()},
        }


def validate(model: CorrespondenceModel, rig: Rig, pixels: np.ndarray, depths: Sequence[float],
             wavelengths: Sequence[float]) -> ValidationReport:
    """
    Compares queries with the exact grating solve over pixels × depths × wavelengths.

    Points without a propagating solution or outside the hull are skipped.
    """
    pixels = np.atleast_2d(np.asarray(pixels, dtype=np.float64))
    n_z, n_lam = len(depths), len(wavelengths)
    P = np.repeat(pixels, n_z * n_lam, axis=0)
    Z = np.tile(np.repeat(np.asarray(depths, dtype=np.float64), n_lam), pixels.shape[0])
    lam = np.tile(np.asarray(wavelengths, dtype=np.float64), pixels.shape[0] * n_z)
    points = rig.camera.unproject_many(P, Z)
    errors_all = []
    per_order = {}
    for m in model.orders:
        exact = solve_grating_points(points, rig, m, lam).q[:, 0]
        approx, _ = query_many(model, P, Z, m, lam)
        e = np.abs(approx - exact)
        e = e[np.isfinite(e)]
        per_order[m] = (float(e.mean()) if e.size else float("nan"), float(e.max()) if e.size else float("nan"))
        errors_all.append(e)
    e = np.concatenate(errors_all)
    if e.size == 0:
        return ValidationReport(float("nan"), float("nan"), 0, per_order)
    return ValidationReport(float(e.mean()), float(e.max()), int(e.size), per_order)
