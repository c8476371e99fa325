"""
evaluate: evaluation protocols.

Protocols:
    - spectral: cube against a ground-truth scene; RMSE, spectral angle,
      probe spectra and a per-patch FWHM table
    - absolute-depth: a plane moved along the optical axis on a translation stage
    - relative-depth: depth separation of the two-box scene
    - metamers: a camera-metameric pair and, optionally, its reconstruction
"""

import argparse
import os
from typing import Dict, Optional

import numpy as np
import pandas as pd

import utils.func as func
from commands.common import (
    RunContext,
    build_context,
    decoding_setup,
    float_list,
    require,
    resolve_model,
    scene_shape,
    write_manifest,
)
from commands.registry import register_command
from patterns.scanline import gen_scanlines
from reconstruction.depth import DepthMap, reconstruct_depth
from reconstruction.pipeline import reconstruct_hyperspectral
from reconstruction.sweeps import binary_patterns, translation_stage_sweep
from simulation.demo_scenes import colorchecker_spectra, two_box_scene
from simulation.noise import add_noise
from simulation.renderer import render_stack
from simulation.scene import Scene, load_scene
from spectra.analysis import fwhm
from utils.codecs.cube import read_cube
from utils.codecs.tables import read_table, write_spectra_table, write_table
from utils.error_types import ConfigError, UndefinedMetricError
from utils.metrics import (
    metamer_pair,
    probe_spectra,
    relative_depth,
    spectral_angle,
    spectral_rmse,
    write_metrics,
)

PROTOCOLS = ("spectral", "absolute-depth", "relative-depth", "metamers")


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--protocol", choices=PROTOCOLS, required=True)
    parser.add_argument("--cube", default=None, help="DSLH cube (spectral)")
    parser.add_argument("--truth", default=None, help="Ground-truth scene manifest (spectral)")
    parser.add_argument("--model", default=None, help="Correspondence model for simulated protocols")
    parser.add_argument("--patch", default=None, help="ColorChecker patch used as metamer base")
    parser.add_argument("--reconstruct", action="store_true",
                        help="metamers: also render and reconstruct the pair")


def _fwhm_or_nan(values: np.ndarray, wavelengths: np.ndarray) -> float:
    try:
        return fwhm(values, wavelengths)
    except UndefinedMetricError:
        return float("nan")


def solved_mask(cube_path: str, shape) -> Optional[np.ndarray]:
    """Pixels with a finite residual in the diagnostics.csv next to the cube."""
    path = os.path.join(os.path.dirname(cube_path), "diagnostics.csv")
    if not os.path.exists(path):
        return None
    table = read_table(path, ["px", "py", "residual"])
    mask = np.zeros(shape, dtype=bool)
    keep = table["residual"].notna().to_numpy()
    mask[table["py"].to_numpy(int)[keep], table["px"].to_numpy(int)[keep]] = True
    return mask


def patch_table(cube: np.ndarray, scene: Scene, mask: np.ndarray) -> pd.DataFrame:
    """Mean estimated spectrum per labelled patch against the patch's true spectrum."""
    if scene.labels is None or not scene.patches:
        return pd.DataFrame(columns=["patch", "pixels", "rmse", "fwhm_est_nm", "fwhm_gt_nm"])
    w = scene.grid.wavelengths
    rows = []
    for k, (name, truth) in enumerate(scene.patches.items()):
        inside = mask & (scene.labels == k)
        if not inside.any():
            continue
        estimate = cube[inside].mean(axis=0)
        rows.append({
            "patch": name,
            "pixels": int(inside.sum()),
            "rmse": float(np.sqrt(np.mean((estimate - truth) ** 2))),
            "fwhm_est_nm": _fwhm_or_nan(estimate, w),
            "fwhm_gt_nm": _fwhm_or_nan(truth, w),
        })
    return pd.DataFrame(rows)


def evaluate_spectral(ctx: RunContext, cube_path: str, truth_path: str) -> Dict:
    cube = read_cube(require(cube_path, "hyperspectral cube"))
    scene = load_scene(require(truth_path, "ground-truth scene"), ctx.grid)
    if cube.shape != scene.cube.shape:
        raise ConfigError(f"cube {cube.shape} does not match the scene {scene.cube.shape}; "
                          f"check the Spectra grid")
    solved = solved_mask(cube_path, scene.shape)
    mask = scene.valid if solved is None else scene.valid & solved

    probes = [p for p in ctx.config.evaluation.probes if p[0] < scene.shape[1] and p[1] < scene.shape[0]]
    write_table(ctx.path("probes.csv"), probe_spectra(cube, scene.grid, probes, scene.cube))
    patches = patch_table(cube, scene, mask)
    write_table(ctx.path("patches.csv"), patches)

    peak = float(scene.cube[mask].max()) if mask.any() else 0.0
    metrics = {
        "pixels": int(mask.sum()),
        "spectral_rmse": spectral_rmse(cube, scene.cube, mask),
        "spectral_rmse_of_peak": spectral_rmse(cube, scene.cube, mask) / peak if peak > 0 else None,
        "spectral_angle_rad": spectral_angle(cube, scene.cube, mask),
        "probes": [list(p) for p in probes],
    }
    fwhm_values = patches["fwhm_est_nm"].to_numpy(float) if not patches.empty else np.array([])
    fwhm_values = fwhm_values[np.isfinite(fwhm_values)]
    if fwhm_values.size:
        metrics["mean_fwhm_nm"] = float(fwhm_values.mean())
    return metrics


def evaluate_absolute_depth(ctx: RunContext, model_path: Optional[str]) -> Dict:
    ev = ctx.config.evaluation
    setup = decoding_setup(ctx, resolve_model(model_path, ctx))
    table, summary = translation_stage_sweep(ctx.rig, setup, ev.sigmas, ev.stage_positions, ev.stage_step_mm,
                                             ev.stage_start_mm, ctx.seed, scene_shape(ctx))
    write_table(ctx.path("stage.csv"), table)
    write_table(ctx.path("stage_summary.csv"), summary)
    return {
        "positions": int(ev.stage_positions),
        "step_mm": float(ev.stage_step_mm),
        "start_mm": float(ev.stage_start_mm),
        "sigmas": float_list(ev.sigmas),
        "mean_abs_mm": float_list(summary["mean_abs_mm"]),
    }


def evaluate_relative_depth(ctx: RunContext, model_path: Optional[str]) -> Dict:
    model = resolve_model(model_path, ctx)
    setup = decoding_setup(ctx, model)
    scene = two_box_scene(scene_shape(ctx), grid=ctx.grid)
    patterns = binary_patterns(ctx.projector_resolution, setup.complementary)
    stack = render_stack(patterns, scene, ctx.rig, model, ctx.responses, ctx.eta, n_jobs=ctx.n_jobs)
    sigma = ctx.config.simulation.sigma
    if sigma > 0:
        stack = add_noise(stack, sigma, ctx.seed)
    depth_map = reconstruct_depth(stack, ctx.rig, setup.tau, setup.threshold_mode, setup.min_contrast,
                                  setup.depth_range)
    box_a, box_b = scene.labels == 0, scene.labels == 1
    estimated = relative_depth(depth_map.depth, box_a, box_b)
    truth = relative_depth(scene.depth, box_a, box_b)
    return {
        "sigma": sigma,
        "estimated_mm": estimated,
        "truth_mm": truth,
        "error_mm": abs(estimated - truth),
        "valid_fraction": float(depth_map.valid[scene.valid].mean()),
    }


def metamer_scene(H1: np.ndarray, H2: np.ndarray, ctx: RunContext) -> Scene:
    height, width = scene_shape(ctx)
    labels = np.where(np.arange(width)[None, :] < width // 2, 0, 1).repeat(height, axis=0)
    cube = np.where((labels == 0)[..., None], H1, H2)
    depth = np.full((height, width), ctx.config.simulation.depth_mm)
    return Scene(depth, cube, ctx.grid, "metamers", labels, {"base": H1, "metamer": H2})


def evaluate_metamers(ctx: RunContext, patch: Optional[str], reconstruct: bool,
                      model_path: Optional[str]) -> Dict:
    spectra = colorchecker_spectra(ctx.grid)
    name = patch or next(iter(spectra))
    if name not in spectra:
        raise ConfigError(f"unknown patch '{name}'; choose from {sorted(spectra)}")
    H1, H2 = metamer_pair(spectra[name], ctx.responses)
    write_spectra_table(ctx.path("metamers.csv"), ctx.grid.wavelengths, {"base": H1, "metamer": H2})

    weights = ctx.responses.cam_matrix * ctx.responses.proj_total[None]
    rgb1, rgb2 = weights @ H1, weights @ H2
    metrics = {
        "patch": name,
        "rgb_base": float_list(rgb1),
        "rgb_metamer": float_list(rgb2),
        "rgb_max_abs_difference": float(np.max(np.abs(rgb1 - rgb2))),
        "spectral_rmse_between": float(np.sqrt(np.mean((H1 - H2) ** 2))),
    }
    if not reconstruct:
        return metrics

    model = resolve_model(model_path, ctx)
    scene = metamer_scene(H1, H2, ctx)
    pattern = ctx.config.patterns
    scanlines = gen_scanlines(ctx.projector_resolution, pattern.line_width, pattern.shift)
    stack = render_stack(scanlines, scene, ctx.rig, model, ctx.responses, ctx.eta, n_jobs=ctx.n_jobs)
    depth_map = DepthMap(np.asarray(scene.depth), np.zeros(scene.shape, dtype=np.uint8))
    rec = ctx.config.reconstruction
    image = reconstruct_hyperspectral(stack, depth_map, ctx.rig, model, ctx.responses, ctx.eta,
                                      rec.kappa_lambda, rec.kappa_sigma, rec.kappa_interior, rec.system_model,
                                      rec.orders, False, rec.max_iterations, ctx.n_jobs)
    solved = image.solved
    halves = [solved & (scene.labels == k) for k in (0, 1)]
    means = [image.cube[h].mean(axis=0) if h.any() else np.zeros(ctx.grid.count) for h in halves]
    metrics["reconstructed"] = {
        "rmse_base": float(np.sqrt(np.mean((means[0] - H1) ** 2))),
        "rmse_metamer": float(np.sqrt(np.mean((means[1] - H2) ** 2))),
        "rmse_between": float(np.sqrt(np.mean((means[0] - means[1]) ** 2))),
    }
    write_spectra_table(ctx.path("metamers_reconstructed.csv"), ctx.grid.wavelengths,
                        {"base": means[0], "metamer": means[1]})
    return metrics


def evaluate(ctx: RunContext, protocol: str, cube=None, truth=None, model=None, patch=None,
             reconstruct: bool = False) -> Dict:
    if protocol == "spectral":
        if not cube or not truth:
            raise ConfigError("the spectral protocol needs --cube and --truth")
        metrics = evaluate_spectral(ctx, cube, truth)
    elif protocol == "absolute-depth":
        metrics = evaluate_absolute_depth(ctx, model)
    elif protocol == "relative-depth":
        metrics = evaluate_relative_depth(ctx, model)
    elif protocol == "metamers":
        metrics = evaluate_metamers(ctx, patch, reconstruct, model)
    else:
        raise ConfigError(f"unknown protocol '{protocol}'")
    metrics = {"protocol": protocol, **metrics}
    write_metrics(ctx.out_dir, ctx.command, metrics)
    write_manifest(ctx, sorted(set(os.listdir(ctx.out_dir)) | {"manifest.json"}),
                   {"protocol": protocol, "cube": cube, "truth": truth, "model": model})
    func.log.info("Evaluation '%s' written to %s", protocol, ctx.out_dir)
    return metrics


def run(args: argparse.Namespace) -> int:
    ctx = build_context(args, "evaluate")
    evaluate(ctx, args.protocol, args.cube, args.truth, args.model, args.patch, args.reconstruct)
    return 0


register_command(
    "evaluate", run, configure,
    help="Run an evaluation protocol",
    description="Spectral accuracy, absolute and relative depth, and metamer protocols.",
    artifacts=("metrics.json", "manifest.json"),
)
