"""
Experiment Configuration

Typed settings resolved from, in increasing precedence:
- Built-in defaults (DEFAULT_CONFIG_CONTENT)
- The user's config.yml
- A built-in preset's overrides
- Command-line flags
"""

import copy
from dataclasses import dataclass, field, fields
from typing import Any, Dict, Optional, Sequence, Tuple

import yaml

import utils.func as func
from utils.config_updater import DEFAULT_CONFIG_CONTENT
from utils.error_types import ConfigError

# Dispersive desk setup, the default everything else is tuned on
DESK_PRESET_OVERRIDES = {
    "Paths": {"rig": "builtin:desk"},
    "Simulation": {"depth_mm": 800.0},
}

# Full-size rig with complementary codes (K_b = 40)
PROTOTYPE_PRESET_OVERRIDES = {
    "Paths": {"rig": "builtin:prototype"},
    "Patterns": {"complementary": True},
    "Simulation": {"depth_mm": 1000.0},
    "Calibration": {"depth_mm": 1000.0},
}

# Narrowband targets for spectral resolution
FWHM_STUDY_PRESET_OVERRIDES = {
    "Paths": {"rig": "builtin:desk"},
    "Simulation": {"scene": "bandpass", "sigma": 0.0},
}

# Binary decoding under noise on random planar reflectance
NOISE_STUDY_PRESET_OVERRIDES = {
    "Paths": {"rig": "builtin:prototype"},
    "Simulation": {"scene": "random-plane", "depth_mm": 1000.0},
    "Evaluation": {"sigmas": [0.0, 0.005, 0.01, 0.02, 0.03, 0.04], "seeds": [0, 1, 2]},
}

BUILTIN_PRESETS = {
    "desk": {
        "name": "Desk",
        "description": "64x64 camera beside a 640x480 projector; fast enough for every test",
        "version": "1.0.0",
        "overrides": DESK_PRESET_OVERRIDES,
    },
    "prototype": {
        "name": "Prototype",
        "description": "384x288 camera, 640x720 projector, complementary binary codes",
        "version": "1.0.0",
        "overrides": PROTOTYPE_PRESET_OVERRIDES,
    },
    "fwhm-study": {
        "name": "FWHM Study",
        "description": "Nine 10 nm boxcar patches for spectral resolution measurements",
        "version": "1.0.0",
        "overrides": FWHM_STUDY_PRESET_OVERRIDES,
    },
    "noise-study": {
        "name": "Noise Study",
        "description": "Binary decoding error against noise level on random planar reflectance",
        "version": "1.0.0",
        "overrides": NOISE_STUDY_PRESET_OVERRIDES,
    },
}


def deep_merge(base: dict, override: dict) -> dict:
    """Recursively merges `override` into `base` in place and returns it."""
    for key, value in override.items():
        if key in base and isinstance(base[key], dict) and isinstance(value, dict):
            base[key] = deep_merge(base[key], value)
        else:
            base[key] = copy.deepcopy(value)
    return base


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def _thaw(value):
    if isinstance(value, tuple):
        return [_thaw(v) for v in value]
    return value


class _Section:
    """from_dict / to_dict for flat settings dataclasses."""

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]):
        data = data or {}
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            func.log.warning("Ignoring unknown %s keys: %s", cls.__name__, ", ".join(unknown))
        try:
            return cls(**{k: _freeze(v) for k, v in data.items() if k in known})
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid {cls.__name__}: {e}")

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: _thaw(getattr(self, f.name)) for f in fields(self)}


@dataclass(frozen=True)
class SpectraSettings(_Section):
    start_nm: float = 430.0
    end_nm: float = 660.0
    step_nm: float = 5.0
    eta0: float = 0.5
    eta_first: Tuple[float, float] = (0.05, 0.2)

    def __post_init__(self):
        if self.step_nm <= 0 or self.end_nm <= self.start_nm:
            raise ConfigError("Spectra needs start_nm < end_nm and step_nm > 0")
        if len(self.eta_first) != 2:
            raise ConfigError("Spectra.eta_first needs two values")

    def grid(self):
        from spectra.grid import WavelengthGrid
        return WavelengthGrid(float(self.start_nm), float(self.end_nm), float(self.step_nm))

    def efficiency(self, orders: Sequence[int] = (-1, 0, 1)):
        from spectra.curves import default_efficiency
        return default_efficiency(self.grid(), float(self.eta0), tuple(float(v) for v in self.eta_first), orders)


@dataclass(frozen=True)
class PatternSettings(_Section):
    line_width: int = 5
    shift: int = 2
    complementary: bool = False

    def __post_init__(self):
        if not 1 <= self.shift <= self.line_width:
            raise ConfigError("Patterns needs 1 <= shift <= line_width")


@dataclass(frozen=True)
class CorrespondenceSettings(_Section):
    lattice_rows: int = 48
    lattice_cols: int = 85
    wavelengths: Tuple[float, ...] = (430.0, 600.0, 610.0, 620.0, 640.0, 650.0, 660.0)
    depths: Tuple[float, ...] = (500.0, 625.0, 750.0, 875.0, 1000.0)
    lut: bool = False
    lut_step_mm: float = 1.0

    def grids(self, camera):
        from correspondence.model import CorrespondenceGrids
        return CorrespondenceGrids.for_camera(camera, int(self.lattice_rows), int(self.lattice_cols),
                                              self.wavelengths, self.depths)


@dataclass(frozen=True)
class SimulationSettings(_Section):
    scene: str = "colorchecker"
    depth_mm: float = 800.0
    resolution: Tuple[int, ...] = ()
    sigma: float = 0.0
    hdr: bool = False

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("Simulation.sigma must be >= 0")
        if self.depth_mm <= 0:
            raise ConfigError("Simulation.depth_mm must be positive")
        if self.resolution and len(self.resolution) != 2:
            raise ConfigError("Simulation.resolution is [width, height] or empty")


@dataclass(frozen=True)
class ReconstructionSettings(_Section):
    tau: float = 0.5
    threshold_mode: str = "relative"
    min_contrast: float = 0.01
    depth_range: Tuple[float, float] = (300.0, 1500.0)
    system_model: str = "exact"
    orders: Tuple[int, ...] = (-1, 1)
    kappa_lambda: float = 0.005
    kappa_sigma: float = 5.0
    kappa_interior: float = 0.9
    max_iterations: int = 1000

    def __post_init__(self):
        if self.threshold_mode not in ("relative", "absolute"):
            raise ConfigError("Reconstruction.threshold_mode is relative or absolute")
        if self.system_model not in ("exact", "narrowband"):
            raise ConfigError("Reconstruction.system_model is exact or narrowband")
        if self.kappa_lambda < 0:
            raise ConfigError("Reconstruction.kappa_lambda must be >= 0")
        if any(m not in (-1, 1) for m in self.orders):
            raise ConfigError("Reconstruction.orders may only hold -1 and 1")


@dataclass(frozen=True)
class CalibrationSettings(_Section):
    depth_mm: float = 800.0
    target_reflectance: float = 0.99
    filter_width_nm: float = 10.0
    eta_step_nm: float = 10.0
    comb_period: int = 64
    comb_line_width: int = 3
    sample_depths: Tuple[float, ...] = (500.0, 625.0, 750.0, 875.0, 1000.0)
    smoothness_weight: float = 0.005
    refinement_pixels: int = 96

    def __post_init__(self):
        if not 0 < self.target_reflectance <= 1:
            raise ConfigError("Calibration.target_reflectance must lie in (0, 1]")


@dataclass(frozen=True)
class EvaluationSettings(_Section):
    sigmas: Tuple[float, ...] = (0.0, 0.005, 0.01, 0.02, 0.03, 0.04)
    seeds: Tuple[int, ...] = (0, 1, 2)
    stage_positions: int = 15
    stage_step_mm: float = 10.0
    stage_start_mm: float = 650.0
    probes: Tuple[Tuple[int, int], ...] = ((8, 8), (24, 8), (40, 40), (56, 56))

    def __post_init__(self):
        if any(s < 0 for s in self.sigmas):
            raise ConfigError("Evaluation.sigmas must be >= 0")


SECTIONS = {
    "Spectra": ("spectra", SpectraSettings),
    "Patterns": ("patterns", PatternSettings),
    "Correspondence": ("correspondence", CorrespondenceSettings),
    "Simulation": ("simulation", SimulationSettings),
    "Reconstruction": ("reconstruction", ReconstructionSettings),
    "Calibration": ("calibration", CalibrationSettings),
    "Evaluation": ("evaluation", EvaluationSettings),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved settings for one run."""
    rig: str = "builtin:desk"
    output_dir: str = "out"
    log_file: str = "dsl.log"
    preset: str = ""
    threads: int = 0
    seed: int = 0
    debug_mode: bool = False
    spectra: SpectraSettings = field(default_factory=SpectraSettings)
    patterns: PatternSettings = field(default_factory=PatternSettings)
    correspondence: CorrespondenceSettings = field(default_factory=CorrespondenceSettings)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    reconstruction: ReconstructionSettings = field(default_factory=ReconstructionSettings)
    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)
    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        paths = data.get("Paths", {}) or {}
        options = data.get("Options", {}) or {}
        sections = {attr: section.from_dict(data.get(key)) for key, (attr, section) in SECTIONS.items()}
        return cls(
            rig=str(paths.get("rig", "builtin:desk")),
            output_dir=str(paths.get("output_dir", "out")),
            log_file=str(paths.get("log_file") or ""),
            preset=str(options.get("preset") or ""),
            threads=int(options.get("threads", 0) or 0),
            seed=int(options.get("seed", 0) or 0),
            debug_mode=bool(options.get("debug_mode", False)),
            **sections,
        )

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "Paths": {"output_dir": self.output_dir, "rig": self.rig, "log_file": self.log_file},
            "Options": {"preset": self.preset, "threads": self.threads, "seed": self.seed,
                        "debug_mode": self.debug_mode},
        }
        for key, (attr, _) in SECTIONS.items():
            data[key] = getattr(self, attr).to_dict()
        return data

    def with_overrides(self, overrides: Dict[str, Any]) -> "ExperimentConfig":
        return ExperimentConfig.from_dict(deep_merge(self.to_dict(), overrides))

    @property
    def n_jobs(self) -> int:
        return func.get_thread_count({"Options": {"threads": self.threads}})


def default_settings() -> Dict[str, Any]:
    data = yaml.safe_load(DEFAULT_CONFIG_CONTENT)
    data.pop("version", None)
    return data


def apply_preset(data: Dict[str, Any], preset: str) -> Dict[str, Any]:
    if preset not in BUILTIN_PRESETS:
        raise ConfigError(f"unknown preset '{preset}'; choose from {sorted(BUILTIN_PRESETS)}")
    func.log.debug("Applying preset '%s'", preset)
    merged = deep_merge(data, BUILTIN_PRESETS[preset]["overrides"])
    merged.setdefault("Options", {})["preset"] = preset
    return merged


def load_experiment_config(path: Optional[str] = "config.yml", preset: Optional[str] = None,
                           overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Resolves an ExperimentConfig.

    Args:
        path: User config file; missing files contribute nothing
        preset: Preset name, otherwise Options.preset from the merged file
        overrides: Nested overrides from command-line flags

    Returns:
        ExperimentConfig
    """
    data = default_settings()
    if path:
        deep_merge(data, func.load_config(path))
    chosen = preset if preset is not None else (data.get("Options", {}) or {}).get("preset") or ""
    if chosen:
        data = apply_preset(data, chosen)
    if overrides:
        deep_merge(data, overrides)
    return ExperimentConfig.from_dict(data)
