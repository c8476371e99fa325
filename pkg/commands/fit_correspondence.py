"""
fit-correspondence: fits the first-order power-law model.

Samples come from a CSV (for example calibrate's samples.csv) or, when
none is given, from the exact grating solve on the configured lattice.
The fitted model is checked against the exact solve on a regular pixel
grid over the sampled depth range.
"""

import argparse

import numpy as np

import utils.func as func
from commands.common import RunContext, build_context, require, write_manifest
from commands.registry import register_command
from correspondence.blob import save_model
from correspondence.model import CorrespondenceModel, build_lut, build_model, validate
from correspondence.sampling import frame_to_samples, sample_correspondence_oracle, samples_to_frame
from utils.codecs.tables import read_samples, write_samples
from utils.metrics import write_metrics

ARTIFACTS = ("model.dslc", "samples.csv", "metrics.json", "manifest.json")


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--samples", default=None, help="Sample CSV (px,py,z_mm,m,lambda_nm,q_col)")
    parser.add_argument("--lut", action="store_true", default=None, help="Tabulate the model over depth")
    parser.add_argument("--check-pixels", dest="check_pixels", type=int, default=20,
                        help="Validation grid size per axis")
    parser.add_argument("--check-depths", dest="check_depths", type=int, default=11,
                        help="Validation depths across the sampled range")


def validation_pixels(ctx: RunContext, count: int) -> np.ndarray:
    """count × count pixels spread over the camera image, margins included."""
    width, height = ctx.rig.camera.width, ctx.rig.camera.height
    xs = np.linspace(0.0, width - 1.0, count)
    ys = np.linspace(0.0, height - 1.0, count)
    X, Y = np.meshgrid(xs, ys)
    return np.stack([X.ravel(), Y.ravel()], axis=-1)


def fit(ctx: RunContext, samples_path=None, lut=None, check_pixels: int = 20,
        check_depths: int = 11) -> CorrespondenceModel:
    grids = ctx.grids()
    orders = ctx.config.reconstruction.orders
    if samples_path:
        frame = read_samples(require(samples_path, "sample table"))
        samples = frame_to_samples(frame, grids, orders)
        source = "table"
    else:
        samples = sample_correspondence_oracle(ctx.rig, grids, orders)
        frame = samples_to_frame(grids, orders, samples)
        source = "oracle"
    write_samples(ctx.path("samples.csv"), frame)

    model = build_model(grids, samples, orders, ctx.rig.projector.width, ctx.n_jobs)
    if ctx.config.correspondence.lut if lut is None else lut:
        model = build_lut(model, ctx.config.correspondence.lut_step_mm)
    save_model(model, ctx.path("model.dslc"))

    lo, hi = grids.depth_range
    report = validate(model, ctx.rig, validation_pixels(ctx, check_pixels),
                      np.linspace(lo, hi, check_depths), grids.wavelengths)
    finite_rms = model.rms[np.isfinite(model.rms)]
    metrics = {
        "source": source,
        "orders": list(orders),
        "lattice": {"nx": grids.nx, "ny": grids.ny, "dx": grids.dx, "dy": grids.dy},
        "wavelengths_nm": list(grids.wavelengths),
        "depths_mm": list(grids.depths),
        "samples": int(len(frame)),
        "fit_rms_px": {
            "mean": float(finite_rms.mean()) if finite_rms.size else None,
            "max": float(finite_rms.max()) if finite_rms.size else None,
        },
        "lut": model.has_lut,
        "validation": report.to_dict(),
    }
    write_metrics(ctx.out_dir, ctx.command, metrics)
    write_manifest(ctx, list(ARTIFACTS), {"samples": samples_path})
    func.log.info("Fitted %d nodes; validation mean %.3f px, max %.3f px",
                  grids.nx * grids.ny, report.mean_error, report.max_error)
    return model


def run(args: argparse.Namespace) -> int:
    ctx = build_context(args, "fit-correspondence")
    fit(ctx, args.samples, args.lut, args.check_pixels, args.check_depths)
    return 0


register_command(
    "fit-correspondence", run, configure,
    help="Fit the first-order correspondence model",
    description="Fits the per-node power law to sampled first-order columns and validates it.",
    artifacts=ARTIFACTS,
)
