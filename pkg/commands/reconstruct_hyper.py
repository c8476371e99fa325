"""
reconstruct-hyper: per-pixel spectral reconstruction from scanline captures.

Depth comes from a binary stack (decoded here) or a depth PFM written by
reconstruct-depth.
"""

import argparse
from typing import Optional

import numpy as np

import utils.func as func
from commands.common import RunContext, build_context, require, resolve_model, write_manifest
from commands.registry import register_command
from reconstruction.depth import DepthMap, reconstruct_depth
from reconstruction.pipeline import HyperspectralImage, reconstruct_hyperspectral, save_depth_map, save_hyperspectral
from simulation.scene import load_scene
from simulation.stack import load_stack
from utils.codecs.pfm import read_pfm
from utils.error_types import ConfigError, PixelFlag, UndefinedMetricError
from utils.metrics import depth_error, spectral_angle, spectral_rmse, write_metrics

ARTIFACTS = ("cube.dslh", "preview_srgb.pfm", "diagnostics.csv", "depth.pfm", "depth_flags.pfm",
             "metrics.json", "manifest.json")


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scanline", required=True, help="Scanline stack manifest")
    parser.add_argument("--binary", default=None, help="Binary stack manifest to decode depth from")
    parser.add_argument("--depth", default=None, help="Depth PFM (0 = invalid) instead of --binary")
    parser.add_argument("--model", default=None, help="Correspondence model; fitted to the exact solve if omitted")
    parser.add_argument("--truth", default=None, help="Scene manifest for error metrics")
    parser.add_argument("--zero-order", dest="zero_order", action="store_true",
                        help="Ablation: solve with zero-order rows only")


def depth_from_pfm(path: str) -> DepthMap:
    depth = read_pfm(require(path, "depth map")).astype(np.float64)
    if depth.ndim == 3:
        depth = depth[..., 0]
    depth = np.where(depth > 0, depth, np.nan)
    flags = np.where(np.isfinite(depth), PixelFlag.OK, PixelFlag.INVALID_DEPTH).astype(np.uint8)
    return DepthMap(depth, flags)


def image_metrics(image: HyperspectralImage, depth_map: DepthMap, truth_path: Optional[str],
                  ctx: RunContext) -> dict:
    solved = image.solved
    flag_counts = {flag.name.lower(): int(np.count_nonzero(image.flags & flag))
                   for flag in PixelFlag if flag != PixelFlag.OK}
    residual = image.residual[np.isfinite(image.residual)]
    metrics = {
        "pixels": int(solved.size),
        "solved": int(solved.sum()),
        "flags": flag_counts,
        "mean_residual": float(residual.mean()) if residual.size else None,
        "mean_iterations": float(image.iterations[solved].mean()) if solved.any() else None,
    }
    if not truth_path:
        return metrics
    scene = load_scene(require(truth_path, "ground-truth scene"), ctx.grid)
    mask = solved & scene.valid
    try:
        metrics["spectral_rmse"] = spectral_rmse(image.cube, scene.cube, mask)
        metrics["spectral_angle_rad"] = spectral_angle(image.cube, scene.cube, mask)
        metrics["depth_error"] = depth_error(depth_map.depth, scene.depth).to_dict()
    except UndefinedMetricError as e:
        func.log.warning("Metric undefined: %s", e)
    return metrics


def reconstruct(ctx: RunContext, scanline_path: str, binary_path: Optional[str] = None,
                depth_path: Optional[str] = None, model_path: Optional[str] = None,
                truth_path: Optional[str] = None, zero_order: bool = False) -> HyperspectralImage:
    if bool(binary_path) == bool(depth_path):
        raise ConfigError("give exactly one of --binary and --depth")
    rec = ctx.config.reconstruction
    if binary_path:
        binary = load_stack(require(binary_path, "binary stack"))
        depth_map = reconstruct_depth(binary, ctx.rig, rec.tau, rec.threshold_mode, rec.min_contrast,
                                      rec.depth_range)
    else:
        depth_map = depth_from_pfm(depth_path)
    scanline = load_stack(require(scanline_path, "scanline stack"))
    model = resolve_model(model_path, ctx)

    image = reconstruct_hyperspectral(scanline, depth_map, ctx.rig, model, ctx.responses, ctx.eta,
                                      rec.kappa_lambda, rec.kappa_sigma, rec.kappa_interior, rec.system_model,
                                      rec.orders, zero_order, rec.max_iterations, ctx.n_jobs)
    save_depth_map(depth_map, ctx.out_dir)
    save_hyperspectral(image, ctx.out_dir)

    metrics = image_metrics(image, depth_map, truth_path, ctx)
    metrics["zero_order_only"] = bool(zero_order)
    metrics["system_model"] = rec.system_model
    write_metrics(ctx.out_dir, ctx.command, metrics)
    write_manifest(ctx, list(ARTIFACTS), {"scanline": scanline_path, "binary": binary_path,
                                          "depth": depth_path, "model": model_path, "truth": truth_path})
    func.log.info("Reconstructed %d spectra", metrics["solved"])
    return image


def run(args: argparse.Namespace) -> int:
    ctx = build_context(args, "reconstruct-hyper")
    reconstruct(ctx, args.scanline, args.binary, args.depth, args.model, args.truth, args.zero_order)
    return 0


register_command(
    "reconstruct-hyper", run, configure,
    help="Reconstruct a hyperspectral cube from scanline captures",
    description="Builds per-pixel zero- and first-order systems and solves the regularized spectra.",
    artifacts=ARTIFACTS,
)
