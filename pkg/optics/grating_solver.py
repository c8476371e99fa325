"""
Exact first-order projection solver.

Given a scene point, find the point r on the grating plane where a
projector ray diffracts into order m at wavelength λ and then reaches the
scene point. Work happens in the grating frame (projector frame rotated by
the grating orientation), where the grating plane is z = f.

Unknowns are the outgoing direction components (d_x, d_y). The incident
direction follows from the grating equation: v = (d_x + mgλ, d_y, v_z).
The ray leaves the center, hits the plane at r = f·v / v_z and continues
along d, so

    P_y = d_y · (f / v_z + (P_z − f) / d_z)
    P_x = f · v_x / v_z + (P_z − f) · d_x / d_z

The first equation is monotone in d_y for fixed d_x. The second, with d_y
eliminated, is monotone in d_x. Both are solved by vectorized bisection.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from optics.rig import Rig
from utils.error_types import ConvergenceError, DomainError, EvanescentOrderError

log = logging.getLogger(__name__)

MAX_ITERATIONS = 80
RESIDUAL_TOLERANCE = 1e-8
_EDGE = 1e-12


@dataclass(frozen=True)
class GratingSolution:
    """
    Attributes:
        r: Grating points in world coordinates, shape (n, 3)
        q: Projector pixels (column, row), shape (n, 2)
        residual: ‖dg(unit(r), m, λ) − unit(P − r)‖ per point
        valid: Points with a propagating solution below tolerance
    """
    r: np.ndarray
    q: np.ndarray
    residual: np.ndarray
    valid: np.ndarray


def _bisect(func, lo: np.ndarray, hi: np.ndarray, iterations: int = MAX_ITERATIONS) -> np.ndarray:
    """Root of an increasing function bracketed by [lo, hi], elementwise."""
    lo, hi = lo.copy(), hi.copy()
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = func(mid) < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4 * np.finfo(np.float64).eps * np.maximum(1.0, np.abs(mid))):
            break
    return 0.5 * (lo + hi)


def _incident(dx, dy, shift):
    vx = dx + shift
    vz = np.sqrt(np.maximum(1.0 - vx * vx - dy * dy, 0.0))
    return vx, vz


def _y_equation(dx, dy, shift, f, P):
    _, vz = _incident(dx, dy, shift)
    dz = np.sqrt(np.maximum(1.0 - dx * dx - dy * dy, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        value = dy * (f / vz + (P[:, 2] - f) / dz) - P[:, 1]
    return np.nan_to_num(value, nan=0.0, posinf=np.inf, neginf=-np.inf)


def _solve_dy(dx, shift, f, P):
    vx = dx + shift
    ymax = np.sqrt(np.clip(1.0 - np.maximum(dx * dx, vx * vx), 0.0, None)) * (1.0 - _EDGE)
    return _bisect(lambda dy: _y_equation(dx, dy, shift, f, P), -ymax, ymax)


def _x_equation(dx, shift, f, P):
    dy = _solve_dy(dx, shift, f, P)
    vx, vz = _incident(dx, dy, shift)
    dz = np.sqrt(np.maximum(1.0 - dx * dx - dy * dy, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        value = f * vx / vz + (P[:, 2] - f) * dx / dz - P[:, 0]
    return np.nan_to_num(value, nan=0.0, posinf=np.inf, neginf=-np.inf)


def _to_grating_frame(points_world: np.ndarray, rig: Rig) -> np.ndarray:
    points_proj = rig.projector.to_model(points_world)
    return points_proj @ rig.grating.frame_rotation


def solve_grating_points(points_world: np.ndarray, rig: Rig, m: int,
                         wavelength_nm, strict: bool = False) -> GratingSolution:
    """
    Vectorized grating-point solve.

    Args:
        points_world: Scene points, shape (n, 3)
        rig: Rig providing projector pose and grating
        m: Diffraction order in the rig's orders
        wavelength_nm: Scalar or per-point wavelengths
        strict: Raise instead of flagging points without a solution

    Returns:
        GratingSolution
    """
    if m not in rig.grating.orders:
        raise DomainError(f"order {m} is not active on this rig")
    P = _to_grating_frame(np.atleast_2d(np.asarray(points_world, dtype=np.float64)), rig)
    n = P.shape[0]
    f = rig.grating.offset_mm
    shift = m * rig.grating.groove_density * np.broadcast_to(
        np.asarray(wavelength_nm, dtype=np.float64), (n,))

    beyond = P[:, 2] > f
    lo = np.maximum(-1.0, -1.0 - shift) + _EDGE
    hi = np.minimum(1.0, 1.0 - shift) - _EDGE
    propagating = beyond & (hi > lo)

    f_lo = _x_equation(lo, shift, f, P)
    f_hi = _x_equation(hi, shift, f, P)
    bracketed = propagating & (f_lo < 0) & (f_hi > 0)

    dx = _bisect(lambda x: _x_equation(x, shift, f, P), lo, hi)
    dy = _solve_dy(dx, shift, f, P)
    vx, vz = _incident(dx, dy, shift)

    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.stack([vx, dy, vz], axis=-1)
        r = f * v / vz[:, None]
        d = np.stack([dx, dy, np.sqrt(np.maximum(1.0 - dx * dx - dy * dy, 0.0))], axis=-1)
        to_point = P - r
        to_point /= np.linalg.norm(to_point, axis=-1, keepdims=True)
        residual = np.linalg.norm(d - to_point, axis=-1)
    residual = np.where(bracketed, residual, np.inf)
    valid = bracketed & (residual < RESIDUAL_TOLERANCE)

    if strict:
        if not np.all(bracketed):
            raise EvanescentOrderError(
                f"order {m} has no propagating path to {int(np.sum(~bracketed))} point(s)")
        if not np.all(valid):
            raise ConvergenceError(
                f"grating solve residual {float(np.max(residual)):.2e} above {RESIDUAL_TOLERANCE:.0e}")

    rotation = rig.grating.frame_rotation
    r_proj = r @ rotation.T
    q = rig.projector.project_model_frame(v @ rotation.T)
    r_world = rig.projector.to_world(r_proj)
    q = np.where(valid[:, None], q, np.nan)
    return GratingSolution(r_world, q, residual, valid)


def solve_grating_point(scene_point, rig: Rig, m: int, wavelength_nm: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Finds the grating point r and projector pixel q for one scene point.

    Raises:
        EvanescentOrderError: No propagating path reaches the point
        ConvergenceError: Residual stays above tolerance
    """
    solution = solve_grating_points(np.asarray(scene_point, dtype=np.float64)[None], rig, m,
                                    wavelength_nm, strict=True)
    return solution.r[0], solution.q[0]


def grating_residual(r_world: np.ndarray, scene_point: np.ndarray, rig: Rig, m: int,
                     wavelength_nm: float) -> np.ndarray:
    """Mismatch between the diffracted direction at r and the direction r → scene point."""
    rotation = rig.grating.frame_rotation
    r = rig.projector.to_model(np.atleast_2d(r_world)) @ rotation
    P = _to_grating_frame(np.atleast_2d(scene_point), rig)
    v = r / np.linalg.norm(r, axis=-1, keepdims=True)
    dx = v[:, 0] - m * rig.grating.groove_density * wavelength_nm
    dy = v[:, 1]
    d = np.stack([dx, dy, np.sqrt(np.maximum(1.0 - dx * dx - dy * dy, 0.0))], axis=-1)
    to_point = P - r
    to_point /= np.linalg.norm(to_point, axis=-1, keepdims=True)
    return np.linalg.norm(d - to_point, axis=-1)
