"""
calibrate: simulated calibration session.

Three stages, each fed by captures of known targets:
    1. Comb patterns on a white target behind bandpass filters → η_m(λ)/η_0(λ)
    2. Scanlines on the ColorChecker scene → refined camera and projector curves
    3. Scanlines on a white target at several depths and filter wavelengths
       → first-order correspondence samples for fit-correspondence

Results are compared with the simulator's own ground truth in metrics.json.
"""

import argparse
from typing import Dict

import numpy as np
import pandas as pd
from scipy.ndimage import gaussian_filter1d

import utils.func as func
from calibration.bandpass import simulate_capture
from calibration.efficiency import EtaEstimate, estimate_eta
from calibration.responses import collect_refinement_observations, curve_roughness, refine_responses
from calibration.samples import extract_correspondence_samples
from commands.common import RunContext, build_context, float_list, resolve_model, write_manifest
from commands.registry import register_command
from correspondence.blob import save_model
from correspondence.model import CorrespondenceModel
from optics.grating_solver import solve_grating_points
from patterns.scanline import gen_comb, gen_scanlines
from simulation.demo_scenes import colorchecker_scene
from simulation.noise import add_noise
from simulation.renderer import render_stack
from spectra.curves import EfficiencySet, ResponseSet
from utils.codecs.tables import write_responses, write_samples, write_spectra_table, write_table
from utils.metrics import write_metrics

ARTIFACTS = ("eta_table.csv", "eta.csv", "cam_response.csv", "proj_response.csv", "samples.csv",
             "model.dslc", "metrics.json", "manifest.json")

STAGES = ("eta", "responses", "samples")

# blur applied to the true curves to stand in for datasheet curves
NOMINAL_BLUR_SAMPLES = 3.0


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default=None, help="Correspondence model used to render the captures")
    parser.add_argument("--stages", nargs="+", choices=STAGES, default=list(STAGES),
                        help="Calibration stages to run")


def nominal_responses(responses: ResponseSet, blur: float = NOMINAL_BLUR_SAMPLES) -> ResponseSet:
    """Blurred copies of the curves, the starting point of the refinement."""
    return ResponseSet.from_matrices(responses.grid,
                                     gaussian_filter1d(responses.cam_matrix, blur, axis=1, mode="nearest"),
                                     gaussian_filter1d(responses.proj_matrix, blur, axis=1, mode="nearest"))


def absolute_efficiency(estimate: EtaEstimate, eta0: float) -> EfficiencySet:
    """Zero-order normalized estimate rescaled to an absolute η_0."""
    return EfficiencySet({m: curve.scaled(eta0) for m, curve in estimate.eta.eta.items()},
                         estimate.eta.uncalibrated)


def calibrate_eta(ctx: RunContext, model: CorrespondenceModel) -> Dict:
    cal = ctx.config.calibration
    period = int(cal.comb_period)
    offsets = tuple(range(0, period, max(1, period // 4)))
    comb = gen_comb(ctx.projector_resolution, period, int(cal.comb_line_width), offsets)
    centers = np.arange(ctx.grid.start_nm, ctx.grid.end_nm + 1e-9, cal.eta_step_nm)
    capture = simulate_capture(comb, ctx.rig, model, ctx.responses, ctx.eta, centers, cal.depth_mm,
                               cal.filter_width_nm, cal.target_reflectance, ctx.config.simulation.sigma,
                               ctx.seed, ctx.n_jobs)
    orders = ctx.config.reconstruction.orders
    estimate = estimate_eta(capture, comb, ctx.rig, model, ctx.responses, orders, ctx.n_jobs)

    write_table(ctx.path("eta_table.csv"), estimate.table)
    write_spectra_table(ctx.path("eta.csv"), ctx.grid.wavelengths,
                        {f"eta_{m:+d}": estimate.eta.values(m) for m in estimate.eta.orders})

    truth = ctx.eta.normalized()
    table = estimate.table[estimate.table["m"] != 0].dropna(subset=["eta"])
    errors = [abs(row.eta - truth.eta[int(row.m)].at(row.center_nm)) for row in table.itertuples()]
    return {
        "estimate": estimate,
        "metrics": {
            "filters": len(capture),
            "orders": list(orders),
            "uncalibrated": list(estimate.eta.uncalibrated),
            "max_abs_error_at_filters": float(max(errors)) if errors else None,
        },
    }


def calibrate_responses(ctx: RunContext, model: CorrespondenceModel, eta: EfficiencySet) -> Dict:
    cal = ctx.config.calibration
    scene = colorchecker_scene(ctx.camera_shape, cal.depth_mm, grid=ctx.grid)
    patterns = ctx.config.patterns
    scanlines = gen_scanlines(ctx.projector_resolution, patterns.line_width, patterns.shift)
    stack = render_stack(scanlines, scene, ctx.rig, model, ctx.responses, ctx.eta, n_jobs=ctx.n_jobs)
    sigma = ctx.config.simulation.sigma
    if sigma > 0:
        stack = add_noise(stack, sigma, ctx.seed + 1)

    data = collect_refinement_observations(stack, scanlines, scene, ctx.rig, model, eta, ctx.responses,
                                           int(cal.refinement_pixels), ctx.n_jobs)
    initial = nominal_responses(ctx.responses)
    result = refine_responses(initial, data, cal.smoothness_weight)
    write_responses(ctx.path("cam_response.csv"), result.responses.cam)
    write_responses(ctx.path("proj_response.csv"), result.responses.proj)

    def curve_error(estimate: ResponseSet) -> float:
        cam = np.abs(estimate.cam_matrix - ctx.responses.cam_matrix).max()
        proj = np.abs(estimate.proj_matrix - ctx.responses.proj_matrix).max()
        return float(max(cam, proj))

    return {
        "observations": int(data.intensities.shape[0]),
        "iterations": result.iterations,
        "initial_loss": result.initial_loss,
        "loss": result.loss,
        "initial_data_loss": result.initial_data_loss,
        "data_loss": result.data_loss,
        "roughness": {"initial": curve_roughness(initial), "refined": curve_roughness(result.responses)},
        "max_abs_curve_error": {"initial": curve_error(initial), "refined": curve_error(result.responses)},
    }


def sample_errors(ctx: RunContext, frame: pd.DataFrame) -> Dict:
    """Extracted columns against the exact grating solve."""
    if frame.empty:
        return {"count": 0, "mean_abs_px": None, "max_abs_px": None}
    pixels = frame[["px", "py"]].to_numpy(float)
    points = ctx.rig.camera.unproject_many(pixels, frame["z_mm"].to_numpy(float))
    exact = np.full(len(frame), np.nan)
    for m in np.unique(frame["m"].to_numpy(int)):
        rows = frame["m"].to_numpy(int) == m
        exact[rows] = solve_grating_points(points[rows], ctx.rig, int(m),
                                           frame["lambda_nm"].to_numpy(float)[rows]).q[:, 0]
    error = np.abs(frame["q_col"].to_numpy(float) - exact)
    error = error[np.isfinite(error)]
    return {"count": int(error.size), "mean_abs_px": float(error.mean()), "max_abs_px": float(error.max())}


def calibrate_samples(ctx: RunContext, model: CorrespondenceModel) -> Dict:
    cal = ctx.config.calibration
    patterns = ctx.config.patterns
    grids = ctx.grids()
    scanlines = gen_scanlines(ctx.projector_resolution, patterns.line_width, patterns.shift)
    orders = ctx.config.reconstruction.orders

    frames, skipped = [], {}
    # one depth at a time keeps a single set of filtered stacks in memory
    for i, depth in enumerate(sorted(cal.sample_depths)):
        capture = simulate_capture(scanlines, ctx.rig, model, ctx.responses, ctx.eta, grids.wavelengths, depth,
                                   cal.filter_width_nm, cal.target_reflectance, ctx.config.simulation.sigma,
                                   ctx.seed + 100 * (i + 1), ctx.n_jobs)
        report = extract_correspondence_samples([capture], grids, orders, n_jobs=ctx.n_jobs)
        frames.append(report.to_frame())
        for reason, count in report.skipped.items():
            skipped[reason] = skipped.get(reason, 0) + count
    frame = pd.concat(frames, ignore_index=True)
    write_samples(ctx.path("samples.csv"), frame)
    return {
        "depths_mm": float_list(sorted(cal.sample_depths)),
        "wavelengths_nm": float_list(grids.wavelengths),
        "samples": int(len(frame)),
        "skipped": skipped,
        "error": sample_errors(ctx, frame),
        "half_shift_px": patterns.shift / 2.0,
    }


def calibrate(ctx: RunContext, model_path=None, stages=STAGES) -> Dict:
    model = resolve_model(model_path, ctx)
    save_model(model, ctx.path("model.dslc"))
    metrics: Dict = {"stages": list(stages)}
    eta = ctx.eta
    if "eta" in stages:
        stage = calibrate_eta(ctx, model)
        metrics["eta"] = stage["metrics"]
        eta = absolute_efficiency(stage["estimate"], ctx.config.spectra.eta0)
    if "responses" in stages:
        metrics["responses"] = calibrate_responses(ctx, model, eta)
    if "samples" in stages:
        metrics["samples"] = calibrate_samples(ctx, model)
    write_metrics(ctx.out_dir, ctx.command, metrics)
    write_manifest(ctx, list(ARTIFACTS), {"model": model_path})
    func.log.info("Calibration finished: %s", ", ".join(stages))
    return metrics


def run(args: argparse.Namespace) -> int:
    ctx = build_context(args, "calibrate")
    calibrate(ctx, args.model, tuple(args.stages))
    return 0


register_command(
    "calibrate", run, configure,
    help="Recover efficiency, response curves and correspondence samples",
    description="Simulates bandpass and ColorChecker captures and calibrates from them.",
    artifacts=ARTIFACTS,
)
