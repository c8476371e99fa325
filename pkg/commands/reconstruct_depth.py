"""
reconstruct-depth: decodes a binary stack and triangulates depth.
"""

import argparse
from typing import Optional

import numpy as np

import utils.func as func
from commands.common import RunContext, build_context, require, write_manifest
from commands.registry import register_command
from reconstruction.depth import DepthMap, reconstruct_depth
from reconstruction.pipeline import save_depth_map
from simulation.scene import load_scene
from simulation.stack import load_stack
from utils.error_types import PixelFlag, UndefinedMetricError
from utils.metrics import depth_error, write_metrics

ARTIFACTS = ("depth.pfm", "depth_flags.pfm", "metrics.json", "manifest.json")


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--binary", required=True, help="Binary stack manifest (simulate's binary/stack.json)")
    parser.add_argument("--truth", default=None, help="Scene manifest with ground-truth depth")


def depth_metrics(depth_map: DepthMap, truth_path: Optional[str], ctx: RunContext) -> dict:
    valid = depth_map.valid
    metrics = {
        "pixels": int(valid.size),
        "valid": int(valid.sum()),
        "valid_fraction": float(valid.mean()),
        "saturated": int(np.count_nonzero(depth_map.flags & PixelFlag.SATURATED)),
    }
    if truth_path:
        scene = load_scene(require(truth_path, "ground-truth scene"), ctx.grid)
        try:
            metrics["depth_error"] = depth_error(depth_map.depth, scene.depth).to_dict()
        except UndefinedMetricError as e:
            func.log.warning("Depth error undefined: %s", e)
            metrics["depth_error"] = None
    return metrics


def decode(ctx: RunContext, binary_path: str, truth_path: Optional[str] = None) -> DepthMap:
    stack = load_stack(require(binary_path, "binary stack"))
    rec = ctx.config.reconstruction
    depth_map = reconstruct_depth(stack, ctx.rig, rec.tau, rec.threshold_mode, rec.min_contrast, rec.depth_range)
    save_depth_map(depth_map, ctx.out_dir)
    metrics = depth_metrics(depth_map, truth_path, ctx)
    write_metrics(ctx.out_dir, ctx.command, metrics)
    write_manifest(ctx, list(ARTIFACTS), {"binary": binary_path, "truth": truth_path})
    func.log.info("Decoded %d of %d pixels", metrics["valid"], metrics["pixels"])
    return depth_map


def run(args: argparse.Namespace) -> int:
    ctx = build_context(args, "reconstruct-depth")
    decode(ctx, args.binary, args.truth)
    return 0


register_command(
    "reconstruct-depth", run, configure,
    help="Decode binary codes and triangulate depth",
    artifacts=ARTIFACTS,
)
