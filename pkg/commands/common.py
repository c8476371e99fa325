"""
Shared plumbing for the subcommands: common flags, the resolved run
context, dependency checks and the per-run manifest.
"""

import argparse
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import utils.func as func
from correspondence.blob import load_model
from correspondence.model import CorrespondenceGrids, CorrespondenceModel, build_lut
from correspondence.sampling import fit_oracle_model
from optics.rig import Rig, resolve_rig
from reconstruction.sweeps import DecodingSetup
from simulation.demo_scenes import DEMO_SCENES, build_demo_scene
from simulation.scene import Scene, load_scene
from spectra.curves import EfficiencySet, ResponseSet, default_responses
from spectra.grid import WavelengthGrid
from utils.error_types import DependencyError
from utils.experiment_config import ExperimentConfig, load_experiment_config
from utils.persistence import ensure_dir, write_json


def common_parser() -> argparse.ArgumentParser:
    """Flags every subcommand accepts; used as an argparse parent."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", default="config.yml", help="YAML configuration file")
    parser.add_argument("--preset", default=None, help="Built-in preset applied over the file")
    parser.add_argument("--seed", type=int, default=None, help="Root seed")
    parser.add_argument("--out", default=None, help="Output directory (default <output_dir>/<command>)")
    parser.add_argument("--sigma", type=float, nargs="+", default=None,
                        help="Noise level; several values for sweeps")
    parser.add_argument("--kappa-lambda", dest="kappa_lambda", type=float, default=None,
                        help="Spectral smoothness weight")
    parser.add_argument("--tau", type=float, default=None, help="Binary decoding threshold")
    parser.add_argument("--orders", type=int, nargs="+", default=None, help="First orders used, e.g. -1 1")
    parser.add_argument("--debug", action="store_true", help="Log DEBUG records to the console")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Nested config overrides for the flags that were given."""
    overrides: Dict[str, Dict[str, Any]] = {}

    def put(section, key, value):
        if value is not None:
            overrides.setdefault(section, {})[key] = value

    put("Options", "seed", getattr(args, "seed", None))
    if getattr(args, "debug", False):
        put("Options", "debug_mode", True)
    sigma = getattr(args, "sigma", None)
    if sigma:
        put("Simulation", "sigma", float(sigma[0]))
        put("Evaluation", "sigmas", [float(s) for s in sigma])
    put("Reconstruction", "kappa_lambda", getattr(args, "kappa_lambda", None))
    put("Reconstruction", "tau", getattr(args, "tau", None))
    orders = getattr(args, "orders", None)
    if orders:
        put("Reconstruction", "orders", [int(m) for m in orders])
    return overrides


@dataclass
class RunContext:
    """Everything a subcommand needs once configuration is resolved."""
    command: str
    config: ExperimentConfig
    rig: Rig
    grid: WavelengthGrid
    responses: ResponseSet
    eta: EfficiencySet
    out_dir: str

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def n_jobs(self) -> int:
        return self.config.n_jobs

    @property
    def camera_shape(self):
        return self.rig.camera.height, self.rig.camera.width

    @property
    def projector_resolution(self):
        return self.rig.projector.width, self.rig.projector.height

    def grids(self) -> CorrespondenceGrids:
        return self.config.correspondence.grids(self.rig.camera)

    def path(self, *parts: str) -> str:
        return os.path.join(self.out_dir, *parts)


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    return load_experiment_config(args.config, args.preset, overrides_from_args(args))


def build_context(args: argparse.Namespace, command: str,
                  config: Optional[ExperimentConfig] = None) -> RunContext:
    """Resolves config, rig, curves and the output directory."""
    config = config or load_config(args)
    rig = resolve_rig(config.rig)
    grid = config.spectra.grid()
    out_dir = ensure_dir(args.out or os.path.join(config.output_dir, command))
    func.log.debug("Command '%s' on rig '%s', %d wavelengths, %d threads",
                   command, rig.name, grid.count, config.n_jobs)
    return RunContext(command, config, rig, grid, default_responses(grid), config.spectra.efficiency(), out_dir)


def require(path: Optional[str], what: str) -> str:
    """Raises DependencyError unless `path` names an existing file."""
    if not path or not os.path.exists(path):
        raise DependencyError(f"{what} not found: '{path}'")
    return path


def resolve_model(path: Optional[str], ctx: RunContext) -> CorrespondenceModel:
    """
    Loads a DSLC model, or fits one to the exact grating solve when no path is given.

    Raises:
        DependencyError: `path` is given but missing
    """
    if path:
        model = load_model(require(path, "correspondence model"))
        func.log.info("Loaded correspondence model '%s'", path)
        return model
    func.log.info("No model given; fitting one to the exact grating solve")
    model = fit_oracle_model(ctx.rig, ctx.grids(), n_jobs=ctx.n_jobs)
    if ctx.config.correspondence.lut:
        model = build_lut(model, ctx.config.correspondence.lut_step_mm)
    return model


def decoding_setup(ctx: RunContext, model: Optional[CorrespondenceModel]) -> DecodingSetup:
    rec = ctx.config.reconstruction
    return DecodingSetup(model, ctx.responses, ctx.eta, ctx.config.patterns.complementary, rec.tau,
                         rec.threshold_mode, rec.min_contrast, tuple(rec.depth_range), ctx.n_jobs)


def scene_shape(ctx: RunContext):
    resolution = ctx.config.simulation.resolution
    if resolution:
        return int(resolution[1]), int(resolution[0])
    return ctx.camera_shape


def resolve_scene(reference: str, ctx: RunContext, depth_mm: Optional[float] = None) -> Scene:
    """A demo scene name or a scene manifest path, on the run's wavelength grid."""
    if reference in DEMO_SCENES:
        depth = ctx.config.simulation.depth_mm if depth_mm is None else depth_mm
        return build_demo_scene(reference, scene_shape(ctx), depth, ctx.grid)
    return load_scene(require(reference, "scene manifest"), ctx.grid)


def write_manifest(ctx: RunContext, artifacts: Dict[str, Any], inputs: Optional[Dict[str, Any]] = None,
                   name: str = "manifest.json") -> str:
    """Records command, version, resolved config, inputs and written artifacts."""
    manifest = {
        "command": ctx.command,
        "version": func.get_version(),
        "rig": ctx.rig.name,
        "config": ctx.config.to_dict(),
        "inputs": inputs or {},
        "artifacts": artifacts,
    }
    path = ctx.path(name)
    write_json(path, manifest)
    func.log.info("Wrote %s", path)
    return path


def float_list(values: Sequence[float]):
    return [float(v) for v in values]
