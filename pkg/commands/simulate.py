"""
simulate: renders the binary and scanline stacks of a scene.

Writes scene/ (ground truth), binary/ (K_b codes plus white and black
references), scanline/ (K_s lines), the model used for rendering, an sRGB
preview of the scene reflectance and metrics.json.
"""

import argparse
import os

import numpy as np

import utils.func as func
from commands.common import RunContext, build_context, resolve_model, resolve_scene, write_manifest
from commands.registry import register_command
from correspondence.blob import save_model
from patterns.scanline import gen_scanlines
from reconstruction.sweeps import binary_patterns
from simulation.hdr import HDRSettings, merge_hdr, simulate_hdr_pair
from simulation.noise import add_noise
from simulation.renderer import prepare_illumination, render_stack
from simulation.scene import save_scene
from simulation.stack import CaptureStack, save_stack
from spectra.srgb import to_srgb
from utils.codecs.pfm import write_pfm
from utils.error_types import PixelFlag
from utils.metrics import write_metrics
from utils.persistence import ensure_dir

ARTIFACTS = ("scene/scene.json", "binary/stack.json", "scanline/stack.json", "model.dslc",
             "scene_srgb.pfm", "metrics.json", "manifest.json")


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scene", default=None, help="Demo scene name or scene manifest path")
    parser.add_argument("--depth", type=float, default=None, help="Plane depth of demo scenes (mm)")
    parser.add_argument("--model", default=None, help="Correspondence model; fitted to the exact solve if omitted")
    parser.add_argument("--hdr", action="store_true", default=None, help="Capture and merge a low/high pair")


def finish(stack: CaptureStack, ctx: RunContext, hdr: bool, seed: int) -> CaptureStack:
    """Applies the configured capture: plain noise or an HDR pair merged back."""
    sigma = ctx.config.simulation.sigma
    if hdr:
        low, high = simulate_hdr_pair(stack, HDRSettings(), sigma, seed)
        return merge_hdr(low, high)
    if sigma > 0:
        return add_noise(stack, sigma, seed)
    return stack


def simulate(ctx: RunContext, scene_ref: str, depth_mm=None, model_path=None, hdr: bool = False) -> dict:
    """Runs the simulation into ctx.out_dir and returns the metrics."""
    scene = resolve_scene(scene_ref, ctx, depth_mm)
    model = resolve_model(model_path, ctx)
    sim = ctx.config.simulation
    patterns = ctx.config.patterns

    binary = binary_patterns(ctx.projector_resolution, patterns.complementary)
    scanlines = gen_scanlines(ctx.projector_resolution, patterns.line_width, patterns.shift)
    illumination = prepare_illumination(scene, ctx.rig, model, ctx.responses, ctx.eta, n_jobs=ctx.n_jobs)

    stacks = {}
    for offset, (name, pattern_set) in enumerate((("binary", binary), ("scanline", scanlines))):
        clean = render_stack(pattern_set, scene, ctx.rig, model, ctx.responses, ctx.eta,
                             n_jobs=ctx.n_jobs, illumination=illumination)
        # HDR pairs consume seed and seed + 1
        stacks[name] = finish(clean, ctx, hdr, ctx.seed + 2 * offset)
        save_stack(stacks[name], ensure_dir(ctx.path(name)))

    save_scene(scene, ensure_dir(ctx.path("scene")))
    save_model(model, ctx.path("model.dslc"))
    write_pfm(ctx.path("scene_srgb.pfm"), to_srgb(scene.cube, scene.grid))

    flags = illumination.flags
    k_b = len(binary) - 2
    metrics = {
        "scene": scene.name,
        "resolution": [scene.shape[1], scene.shape[0]],
        "K_b": k_b,
        "K_s": len(scanlines),
        "frames": {"binary": len(stacks["binary"]), "scanline": len(stacks["scanline"]),
                   "total": len(stacks["binary"]) + len(stacks["scanline"])},
        "exposure_scale": {name: stack.exposure_scale for name, stack in stacks.items()},
        "sigma": sim.sigma,
        "seed": ctx.seed,
        "hdr": bool(hdr),
        "pixels": {
            "valid": int(np.count_nonzero(scene.valid)),
            "out_of_hull": int(np.count_nonzero(flags & PixelFlag.OUT_OF_HULL)),
            "saturated": int(np.count_nonzero(stacks["scanline"].flags & PixelFlag.SATURATED))
            if stacks["scanline"].flags is not None else 0,
        },
    }
    write_metrics(ctx.out_dir, ctx.command, metrics)
    write_manifest(ctx, list(ARTIFACTS), {"scene": scene_ref, "model": model_path})
    func.log.info("Simulated '%s': %d binary + %d scanline frames", scene.name,
                  metrics["frames"]["binary"], metrics["frames"]["scanline"])
    return metrics


def run(args: argparse.Namespace) -> int:
    ctx = build_context(args, "simulate")
    sim = ctx.config.simulation
    hdr = sim.hdr if args.hdr is None else args.hdr
    simulate(ctx, args.scene or sim.scene, args.depth, args.model, hdr)
    return 0


register_command(
    "simulate", run, configure,
    help="Render binary and scanline captures of a scene",
    description="Renders K_b + 2 binary frames and K_s scanline frames of a demo scene or scene manifest.",
    artifacts=ARTIFACTS,
)
