"""
Camera response and projector emission refinement.

With known patch spectra the rendered intensity is bilinear in the two
curve sets:

    I(o, c) = Σ_λ Ω^cam(c, λ) · Σ_c' G(o, c', λ) · Ω^proj(c', λ)

where G carries exposure, reflectance, distance falloff, efficiency and
the pattern values each order samples. Refinement runs projected gradient
descent on the squared data error plus a first-difference penalty on both
curve sets.

Classes:
    - RefinementData: Observation weights and intensities
    - RefinementResult: Refined curves with loss history

Functions:
    - pattern_weights(): G for one pattern at traced pixels
    - collect_refinement_observations(): G and I for a rendered stack
    - refine_responses(): Gradient descent from initial curves
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from correspondence.model import CorrespondenceModel
from optics.rig import Rig
from patterns.pattern_set import Pattern, PatternSet
from reconstruction.solver import difference_operator
from simulation.geometry import PixelGeometry
from simulation.renderer import prepare_illumination
from simulation.scene import Scene
from simulation.stack import CaptureStack
from spectra.curves import EfficiencySet, ResponseSet
from utils.error_types import ConvergenceError, DomainError, PixelFlag

log = logging.getLogger(__name__)

SMOOTHNESS_WEIGHT = 0.005
MAX_ITERATIONS = 500
MAX_HALVINGS = 30
TOLERANCE = 1e-10


@dataclass(frozen=True)
class RefinementData:
    """
    Attributes:
        weights: (n, 3, N) G per observation, projector channel and wavelength
        intensities: (n, 3) observed camera channels
    """
    weights: np.ndarray = field(repr=False)
    intensities: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.weights.shape[0]

    def predict(self, cam: np.ndarray, proj: np.ndarray) -> np.ndarray:
        return np.einsum("ocl,cl->ol", self.weights, proj) @ cam.T


@dataclass(frozen=True)
class RefinementResult:
    """
    Attributes:
        responses: Refined curves
        loss: Final total objective
        data_loss: Final data term
        initial_loss: Total objective of the initial curves
        initial_data_loss: Data term of the initial curves
        iterations: Accepted iterations
    """
    responses: ResponseSet
    loss: float
    data_loss: float
    initial_loss: float
    initial_data_loss: float
    iterations: int
    history: List[float] = field(default_factory=list, repr=False)


def pattern_weights(pattern: Pattern, geometry: PixelGeometry, eta: Dict[int, np.ndarray]) -> np.ndarray:
    """
    Σ_m η_m(λ) · P(q_m(p, λ), c') for each pixel, projector channel and wavelength.

    Returns:
        (n, 3, N) array
    """
    row = geometry.row
    N = geometry.grid.count
    zero = pattern.sample(row, geometry.zero_col)
    weights = eta[0][None, None, :] * zero[:, :, None] * np.ones((1, 1, N))
    for m in geometry.orders:
        cols = geometry.first_cols(m)
        values = pattern.sample(np.broadcast_to(row[:, None], cols.shape), cols)
        valid = geometry.order_valid(m, pattern.width)
        weights = weights + eta[m][None, None, :] * values.transpose(0, 2, 1) * valid[:, None, None]
    return weights


def collect_refinement_observations(stack: CaptureStack, patterns: PatternSet, scene: Scene, rig: Rig,
                                    model: Optional[CorrespondenceModel], eta: EfficiencySet,
                                    responses: ResponseSet, max_pixels: int = 512,
                                    n_jobs: int = 1) -> RefinementData:
    """
    Gathers (G, I) pairs from a stack rendered of a scene with known spectra.

    Args:
        stack: Captured frames
        patterns: The patterns that were projected
        scene: Scene with the known patch spectra and depths
        rig: The rig
        model: First-order correspondence model
        eta: Diffraction efficiency
        responses: Any response set on the refinement grid; only its grid is used
        max_pixels: Pixels sampled at an even stride
        n_jobs: Worker threads
    """
    if len(stack) != len(patterns):
        raise DomainError(f"stack has {len(stack)} frames for {len(patterns)} patterns")
    if stack.shape != scene.shape:
        raise DomainError(f"stack {stack.shape} and scene {scene.shape} differ in size")
    illumination = prepare_illumination(scene, rig, model, responses, eta, n_jobs=n_jobs)
    flags = illumination.flags.ravel()[illumination.index]
    usable = np.flatnonzero((flags & (PixelFlag.OUT_OF_HULL | PixelFlag.SATURATED)) == 0)
    if stack.flags is not None:
        saturated = stack.flags.ravel()[illumination.index[usable]] & PixelFlag.SATURATED
        usable = usable[saturated == 0]
    if usable.size == 0:
        raise DomainError("no usable pixels for response refinement")
    chosen = usable[np.unique(np.linspace(0, usable.size - 1, min(max_pixels, usable.size)).astype(int))]

    geometry = illumination.geometry.take(chosen)
    reflectance = illumination.reflectance[chosen]
    k = stack.exposure_scale
    flat = stack.frames.reshape(len(stack), -1, 3)[:, illumination.index[chosen]]
    weights, intensities = [], []
    for f, pattern in enumerate(patterns):
        G = pattern_weights(pattern, geometry, illumination.eta)
        weights.append(k * reflectance[:, None, :] * G)
        intensities.append(flat[f])
    log.debug("Collected %d observations from %d pixels", len(patterns) * chosen.size, chosen.size)
    return RefinementData(np.concatenate(weights), np.concatenate(intensities))


def _losses(data: RefinementData, cam, proj, DtD, w) -> Tuple[float, float, np.ndarray]:
    residual = data.predict(cam, proj) - data.intensities
    data_loss = float(np.sum(residual ** 2))
    penalty = w * float(np.sum(cam * (cam @ DtD)) + np.sum(proj * (proj @ DtD)))
    return data_loss + penalty, data_loss, residual


def _gradients(data: RefinementData, cam, proj, residual, DtD, w):
    S = np.einsum("ocl,cl->ol", data.weights, proj)
    grad_cam = 2.0 * residual.T @ S + 2.0 * w * cam @ DtD
    T = residual @ cam
    grad_proj = 2.0 * np.einsum("ol,ocl->cl", T, data.weights) + 2.0 * w * proj @ DtD
    return grad_cam, grad_proj


def refine_responses(initial: ResponseSet, data: RefinementData, w: float = SMOOTHNESS_WEIGHT,
                     max_iterations: int = MAX_ITERATIONS, tolerance: float = TOLERANCE) -> RefinementResult:
    """
    Refines camera and projector curves against observations.

    Each step moves both curve sets along the negative gradient and clips at
    zero. A step that raises the objective is halved and retried; accepted
    steps grow the step by 20%. Refinement stops when the relative objective
    change drops below `tolerance` or no halving lowers the objective.

    Args:
        initial: Starting curves on the observation grid
        data: Observations from collect_refinement_observations()
        w: Smoothness weight on both curve sets
        max_iterations: Accepted-step cap
        tolerance: Relative objective change that ends refinement

    Returns:
        RefinementResult

    Raises:
        ConvergenceError: the objective is not finite for any step size
    """
    if w < 0:
        raise DomainError("smoothness weight must be >= 0")
    if len(data) == 0:
        raise DomainError("no observations to refine against")
    grid = initial.grid
    if data.weights.shape[-1] != grid.count:
        raise DomainError("observations and curves use different grids")
    cam = initial.cam_matrix.copy()
    proj = initial.proj_matrix.copy()
    D = difference_operator(grid.count)
    DtD = D.T @ D

    loss, data_loss, residual = _losses(data, cam, proj, DtD, w)
    if not np.isfinite(loss):
        raise ConvergenceError("initial curves give a non-finite objective")
    initial_loss, initial_data = loss, data_loss
    S = np.einsum("ocl,cl->ol", data.weights, proj)
    scale = 2.0 * (np.linalg.norm(S, 2) ** 2 + np.linalg.norm(data.weights.reshape(len(data), -1), 2) ** 2
                   * max(float(np.max(cam)), 1e-12) ** 2) + 8.0 * w
    step = 1.0 / max(scale, 1e-300)
    history = [loss]
    iterations = 0

    while iterations < max_iterations and loss > 0:
        grad_cam, grad_proj = _gradients(data, cam, proj, residual, DtD, w)
        if not (np.any(grad_cam) or np.any(grad_proj)):
            break
        accepted = False
        for _ in range(MAX_HALVINGS):
            new_cam = np.clip(cam - step * grad_cam, 0.0, None)
            new_proj = np.clip(proj - step * grad_proj, 0.0, None)
            new_loss, new_data, new_residual = _losses(data, new_cam, new_proj, DtD, w)
            if np.isfinite(new_loss) and new_loss <= loss:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if not np.isfinite(new_loss):
                raise ConvergenceError("response refinement diverged")
            break
        change = (loss - new_loss) / max(loss, 1e-300)
        cam, proj, loss, data_loss, residual = new_cam, new_proj, new_loss, new_data, new_residual
        history.append(loss)
        iterations += 1
        step *= 1.2
        if change < tolerance:
            break

    if np.any(proj.sum(axis=1) <= 0):
        raise ConvergenceError("refinement zeroed a projector channel")
    log.info("Refined responses in %d iterations: loss %.4g -> %.4g (data %.4g -> %.4g)",
             iterations, initial_loss, loss, initial_data, data_loss)
    return RefinementResult(ResponseSet.from_matrices(grid, cam, proj), loss, data_loss,
                            initial_loss, initial_data, iterations, history)


def curve_roughness(responses: ResponseSet) -> float:
    """Σ‖∇_λ‖² over both curve sets."""
    D = difference_operator(responses.grid.count)
    return float(np.sum((responses.cam_matrix @ D.T) ** 2) + np.sum((responses.proj_matrix @ D.T) ** 2))
