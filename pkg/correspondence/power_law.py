"""
Power-law depth model q = α·z^β + γ for first-order projector columns.

Fits run in normalized depth t = z / z_ref for conditioning and are
converted back to millimeters on return.

Functions:
    - fit_power_law(): One fit via scipy least squares
    - fit_power_law_batch(): Many fits at once (grid search + batched Levenberg-Marquardt)
    - evaluate_power_law(): α·z^β + γ
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import least_squares

from utils.error_types import DomainError, FitError

log = logging.getLogger(__name__)

BETA_GRID = np.linspace(-4.0, 4.0, 161)
MAX_ITERATIONS = 200


@dataclass(frozen=True)
class PowerLawFit:
    """
    Attributes:
        alpha, beta, gamma: Coefficients in millimeter units
        rms: Root-mean-square residual in pixels
    """
    alpha: float
    beta: float
    gamma: float
    rms: float

    def __call__(self, z):
        return evaluate_power_law(self.alpha, self.beta, self.gamma, z)

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.alpha, self.beta, self.gamma


def evaluate_power_law(alpha, beta, gamma, z):
    return alpha * np.power(z, beta) + gamma


def _linear_given_beta(t: np.ndarray, q: np.ndarray, w: np.ndarray, beta: np.ndarray):
    """Closed-form (a, c) and weighted RSS for fixed β, batched over rows."""
    x = np.power(t, beta[..., None]) if np.ndim(beta) else np.power(t, beta)
    sw = w.sum(axis=-1)
    sx = (w * x).sum(axis=-1)
    sxx = (w * x * x).sum(axis=-1)
    sq = (w * q).sum(axis=-1)
    sxq = (w * x * q).sum(axis=-1)
    det = sw * sxx - sx * sx
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(np.abs(det) > 1e-300, (sw * sxq - sx * sq) / det, 0.0)
        c = np.where(sw > 0, (sq - a * sx) / sw, 0.0)
    rss = (w * (a[..., None] * x + c[..., None] - q) ** 2).sum(axis=-1)
    return a, c, rss


def _initial_guess(t, q, w):
    best = None
    for beta in BETA_GRID:
        if abs(beta) < 1e-9:
            continue
        a, c, rss = _linear_given_beta(t, q, w, np.float64(beta))
        if best is None:
            best = [a, np.full_like(a, beta), c, rss]
            continue
        better = rss < best[3]
        best = [np.where(better, a, best[0]), np.where(better, beta, best[1]),
                np.where(better, c, best[2]), np.where(better, rss, best[3])]
    return best[0], best[1], best[2]


def _reference_depth(z: np.ndarray) -> float:
    return float(np.sqrt(np.min(z) * np.max(z)))


def fit_power_law(z, q) -> PowerLawFit:
    """
    Nonlinear least-squares fit of q = α·z^β + γ.

    Args:
        z: Sample depths (mm), at least four distinct values
        q: Projector columns at those depths

    Returns:
        PowerLawFit with coefficients and RMS residual

    Raises:
        DomainError: Fewer than four distinct depths
        FitError: Solver did not converge (carries the best coefficients)
    """
    z = np.asarray(z, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if z.shape != q.shape or np.unique(z).size < 4:
        raise DomainError("power-law fit needs at least four distinct depth samples")
    if np.any(z <= 0):
        raise DomainError("depths must be positive")

    z_ref = _reference_depth(z)
    t = z / z_ref
    w = np.ones_like(t)
    a0, b0, c0 = (float(v) for v in _initial_guess(t, q, w))

    def residuals(theta):
        return theta[0] * np.power(t, theta[1]) + theta[2] - q

    def jacobian(theta):
        x = np.power(t, theta[1])
        return np.stack([x, theta[0] * x * np.log(t), np.ones_like(t)], axis=1)

    result = least_squares(residuals, x0=[a0, b0, c0], jac=jacobian, method="lm",
                           xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=MAX_ITERATIONS * 10)
    a, b, c = result.x
    rms = float(np.sqrt(np.mean(result.fun ** 2)))
    fit = PowerLawFit(float(a * z_ref ** (-b)), float(b), float(c), rms)
    if result.status <= 0:
        raise FitError(f"power-law fit failed: {result.message}", best=fit)
    return fit


def fit_power_law_batch(z: np.ndarray, Q: np.ndarray, iterations: int = MAX_ITERATIONS):
    """
    Fits every row of Q against the shared depths z.

    NaN entries are ignored. Rows with fewer than four finite samples get NaN
    coefficients.

    Args:
        z: Depths, shape (nz,)
        Q: Columns, shape (n, nz)

    Returns:
        (coefficients (n, 3) as α, β, γ in mm units, rms (n,), residuals (n, nz))
    """
    z = np.asarray(z, dtype=np.float64)
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    w = np.isfinite(Q).astype(np.float64)
    q = np.where(w > 0, Q, 0.0)
    enough = w.sum(axis=1) >= 4

    z_ref = _reference_depth(z)
    t = z / z_ref
    log_t = np.log(t)
    a, b, c = _initial_guess(t, q, w)
    damping = np.full(a.shape, 1e-3)

    def cost(a_, b_, c_):
        r = a_[:, None] * np.power(t, b_[:, None]) + c_[:, None] - q
        return (w * r * r).sum(axis=1)

    current = cost(a, b, c)
    for _ in range(iterations):
        x = np.power(t, b[:, None])
        r = w * (a[:, None] * x + c[:, None] - q)
        J = np.stack([x, a[:, None] * x * log_t, np.ones_like(x)], axis=-1) * w[..., None]
        JtJ = np.einsum("nki,nkj->nij", J, J)
        Jtr = np.einsum("nki,nk->ni", J, r)
        diag = np.einsum("nii->ni", JtJ)
        A = JtJ + (damping[:, None] * (diag + 1e-12))[..., None] * np.eye(3)
        try:
            step = np.linalg.solve(A, -Jtr[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.zeros_like(Jtr)
        step = np.nan_to_num(step)
        trial = cost(a + step[:, 0], b + step[:, 1], c + step[:, 2])
        accept = trial <= current
        a = np.where(accept, a + step[:, 0], a)
        b = np.where(accept, b + step[:, 1], b)
        c = np.where(accept, c + step[:, 2], c)
        improvement = np.where(accept, current - trial, 0.0)
        current = np.where(accept, trial, current)
        damping = np.where(accept, damping * 0.3, damping * 10.0)
        if np.all(improvement <= 1e-30 + 1e-16 * current) and np.all(~accept | (np.abs(step) < 1e-14).all(axis=1)):
            break

    alpha = a * np.power(z_ref, -b)
    coefficients = np.stack([alpha, b, c], axis=1)
    residuals = np.where(w > 0, evaluate_power_law(alpha[:, None], b[:, None], c[:, None], z) - Q, np.nan)
    with np.errstate(invalid="ignore"):
        rms = np.sqrt(np.nansum(residuals ** 2, axis=1) / np.maximum(w.sum(axis=1), 1))
    coefficients[~enough] = np.nan
    rms[~enough] = np.nan
    return coefficients, rms, residuals
