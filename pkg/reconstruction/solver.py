"""
Nonnegative smoothness-regularized least squares, batched over pixels.

Minimizes HᵀQH − 2bᵀH + c + κ_λ‖DH‖² subject to H ≥ 0, where D is the
first-difference operator along wavelength. Q and b come from the
weighted data terms of each pixel.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from spectra.grid import DEFAULT_GRID, SpectralCurve, WavelengthGrid
from utils.error_types import ConvergenceError, DomainError, PixelFlag

log = logging.getLogger(__name__)

MAX_ITERATIONS = 1000
TOLERANCE = 1e-9
INCREASE_LIMIT = 10
MAX_HALVINGS = 20


@dataclass(frozen=True)
class SolveResult:
    """
    Attributes:
        values: (n, N) solutions
        objective: (n,) final objective values
        iterations: (n,) iterations run per pixel
        flags: (n,) PixelFlag bits (DIVERGED)
    """
    values: np.ndarray = field(repr=False)
    objective: np.ndarray = field(repr=False)
    iterations: np.ndarray = field(repr=False)
    flags: np.ndarray = field(repr=False)


def difference_operator(count: int) -> np.ndarray:
    """(count − 1) × count first-difference matrix."""
    return np.diff(np.eye(count), axis=0)


def regularized_gram(Q: np.ndarray, kappa_lambda: float) -> np.ndarray:
    D = difference_operator(Q.shape[-1])
    return Q + kappa_lambda * (D.T @ D)


def _objective(Qt, b, c, x):
    return np.einsum("nl,nl->n", x, np.einsum("nlk,nk->nl", Qt, x)) - 2.0 * np.einsum("nl,nl->n", b, x) + c


def _gradient(Qt, b, x):
    return 2.0 * (np.einsum("nlk,nk->nl", Qt, x) - b)


def _warm_start(Qt: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = np.einsum("nlk,nk->nl", np.linalg.pinv(Qt, hermitian=True), b)
    return np.where(np.isfinite(x), np.maximum(x, 0.0), 0.0)


def solve_quadratic(Q: np.ndarray, b: np.ndarray, c: Optional[np.ndarray] = None,
                    kappa_lambda: float = 0.005, max_iterations: int = MAX_ITERATIONS,
                    tolerance: float = TOLERANCE, x0: Optional[np.ndarray] = None) -> SolveResult:
    """
    Projected accelerated gradient descent with monotone acceptance.

    The step is fixed at 1/L with L = 2·λ_max of the regularized Gram
    matrix. A momentum step that raises the objective is replaced by a plain
    projected step from the current iterate. If the objective still rises
    for INCREASE_LIMIT consecutive steps the step is halved; a pixel that
    needs more than MAX_HALVINGS halvings is flagged DIVERGED.

    Args:
        Q: (n, N, N) symmetric positive semidefinite data Gram matrices
        b: (n, N) right-hand sides
        c: (n,) constants, only shifting the reported objective
        kappa_lambda: Smoothness weight κ_λ ≥ 0
        max_iterations: Iteration cap
        tolerance: Relative change in objective and iterate that stops a pixel
        x0: Optional starting point; default is the clipped unconstrained solution

    Returns:
        SolveResult
    """
    if kappa_lambda < 0:
        raise DomainError("kappa_lambda must be >= 0")
    Q = np.asarray(Q, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, N = b.shape
    c = np.zeros(n) if c is None else np.asarray(c, dtype=np.float64)
    Qt = regularized_gram(Q, kappa_lambda)

    lipschitz = 2.0 * np.linalg.eigvalsh(Qt)[:, -1]
    step = np.where(lipschitz > 0, 1.0 / np.maximum(lipschitz, 1e-300), 0.0)

    x = _warm_start(Qt, b) if x0 is None else np.maximum(np.asarray(x0, dtype=np.float64), 0.0)
    y = x.copy()
    t = np.ones(n)
    f = _objective(Qt, b, c, x)
    increases = np.zeros(n, dtype=np.int64)
    halvings = np.zeros(n, dtype=np.int64)
    iterations = np.zeros(n, dtype=np.int64)
    flags = np.zeros(n, dtype=np.uint8)
    active = lipschitz > 0

    for _ in range(max_iterations):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Qa, ba, ca, sa = Qt[idx], b[idx], c[idx], step[idx][:, None]
        xa, fa = x[idx], f[idx]

        z = np.maximum(y[idx] - sa * _gradient(Qa, ba, y[idx]), 0.0)
        fz = _objective(Qa, ba, ca, z)
        # rounding noise at the optimum does not count as a rise
        noise = 1e-12 * (np.abs(fa) + np.abs(ca) + 2.0 * np.abs(np.einsum("nl,nl->n", ba, xa)))
        accepted = fz <= fa + noise

        # rejected momentum steps fall back to a plain projected step
        plain = ~accepted
        if np.any(plain):
            xp = xa[plain]
            z[plain] = np.maximum(xp - sa[plain] * _gradient(Qa[plain], ba[plain], xp), 0.0)
            fz[plain] = _objective(Qa[plain], ba[plain], ca[plain], z[plain])

        rising = fz > fa + noise
        increases[idx] = np.where(rising, increases[idx] + 1, 0)
        x_new = np.where(rising[:, None], xa, z)
        f_new = np.where(rising, fa, fz)

        t_a = t[idx]
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_a * t_a))
        momentum = np.where(accepted, (t_a - 1.0) / t_next, 0.0)
        y[idx] = x_new + momentum[:, None] * (x_new - xa)
        t[idx] = np.where(accepted, t_next, 1.0)

        scale_x = np.maximum(np.linalg.norm(xa, axis=1), 1e-300)
        done = ((np.abs(fa - f_new) <= tolerance * np.abs(fa) + noise)
                & (np.linalg.norm(x_new - xa, axis=1) <= tolerance * scale_x) & ~rising)

        x[idx], f[idx] = x_new, f_new
        iterations[idx] += 1

        stalled = increases[idx] >= INCREASE_LIMIT
        if np.any(stalled):
            s = idx[stalled]
            step[s] *= 0.5
            halvings[s] += 1
            increases[s] = 0
            y[s] = x[s]
            t[s] = 1.0
            diverged = s[halvings[s] > MAX_HALVINGS]
            flags[diverged] |= int(PixelFlag.DIVERGED)
            active[diverged] = False
        active[idx[done]] = False

    if np.any(flags):
        log.warning("%d pixels diverged", int(np.count_nonzero(flags)))
    return SolveResult(x, f, iterations, flags)


def system_normal_equations(system, kappa_first: float = 0.9, kappa_zero: float = 0.1):
    """Q, b and c of one SystemMatrix with per-order weights."""
    N = next(iter(system.blocks.values()))[0].shape[1]
    Q, b, c = np.zeros((N, N)), np.zeros(N), 0.0
    for m, (A, I) in system.blocks.items():
        w = kappa_zero if m == 0 else kappa_first
        Q += w * A.T @ A
        b += w * A.T @ I
        c += w * float(I @ I)
    return Q, b, c


def solve_pixel(system, kappa_first: float = 0.9, kappa_zero: float = 0.1,
                kappa_lambda: float = 0.005, grid: WavelengthGrid = DEFAULT_GRID,
                **kwargs) -> SpectralCurve:
    """
    Solves one pixel's system.

    Args:
        system: SystemMatrix of the pixel
        kappa_first: Weight κ_1 of the first-order blocks
        kappa_zero: Weight κ_0 of the zero-order block
        kappa_lambda: Smoothness weight κ_λ
        grid: Wavelength grid of the result

    Raises:
        DomainError: The system has no rows
        ConvergenceError: The solve diverged
    """
    if system.empty:
        raise DomainError("cannot solve an empty system")
    Q, b, c = system_normal_equations(system, kappa_first, kappa_zero)
    result = solve_quadratic(Q[None], b[None], np.asarray([c]), kappa_lambda, **kwargs)
    if result.flags[0] & PixelFlag.DIVERGED:
        raise ConvergenceError("spectral solve diverged")
    return SpectralCurve(grid, result.values[0], True)
