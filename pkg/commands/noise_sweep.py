"""
noise-sweep: binary decoding error against additive noise.

Both the dispersive rig and its grating-free counterpart are swept, on
random-reflectance planes, one per seed.
"""

import argparse

import utils.func as func
from commands.common import (
    RunContext,
    build_context,
    decoding_setup,
    float_list,
    resolve_model,
    scene_shape,
    write_manifest,
)
from commands.registry import register_command
from reconstruction.sweeps import noise_sweep
from utils.codecs.tables import write_table
from utils.metrics import write_metrics

ARTIFACTS = ("noise_sweep.csv", "noise_sweep_summary.csv", "metrics.json", "manifest.json")


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default=None, help="Correspondence model; fitted to the exact solve if omitted")
    parser.add_argument("--seeds", type=int, nargs="+", default=None, help="Scene and noise seeds")
    parser.add_argument("--depth", type=float, default=None, help="Plane depth (mm)")


def sweep(ctx: RunContext, model_path=None, seeds=None, depth_mm=None) -> dict:
    ev = ctx.config.evaluation
    seeds = list(seeds if seeds is not None else ev.seeds)
    depth = ctx.config.simulation.depth_mm if depth_mm is None else depth_mm
    model = resolve_model(model_path, ctx)
    setup = decoding_setup(ctx, model)

    table, summary = noise_sweep(ctx.rig, setup, ev.sigmas, seeds, depth, scene_shape(ctx))
    write_table(ctx.path("noise_sweep.csv"), table)
    write_table(ctx.path("noise_sweep_summary.csv"), summary)

    curves = {}
    for label, part in summary.groupby("rig", sort=True):
        part = part.sort_values("sigma")
        curves[label] = {
            "sigma": float_list(part["sigma"]),
            "mean_abs_mm": float_list(part["mean_abs_mm"]),
            "median_abs_mm": float_list(part["median_abs_mm"]),
            "valid_fraction": float_list(part["valid_fraction"]),
        }
    metrics = {
        "depth_mm": float(depth),
        "seeds": seeds,
        "sigmas": float_list(ev.sigmas),
        "pixels_per_run": int(scene_shape(ctx)[0] * scene_shape(ctx)[1]),
        "curves": curves,
    }
    write_metrics(ctx.out_dir, ctx.command, metrics)
    write_manifest(ctx, list(ARTIFACTS), {"model": model_path})
    func.log.info("Noise sweep over %d sigmas and %d seeds", len(ev.sigmas), len(seeds))
    return metrics


def run(args: argparse.Namespace) -> int:
    ctx = build_context(args, "noise-sweep")
    sweep(ctx, args.model, args.seeds, args.depth)
    return 0


register_command(
    "noise-sweep", run, configure,
    help="Binary decoding error against noise level",
    artifacts=ARTIFACTS,
)
