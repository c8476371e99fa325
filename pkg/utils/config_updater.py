import os
from typing import List, Optional

from packaging import version
from ruamel.yaml import YAML
from ruamel.yaml.comments import CommentedMap

import utils.func as func

# Round-trip mode keeps key order and comments when the file is rewritten
yaml = YAML(typ='rt')
yaml.preserve_quotes = True
yaml.encoding = "utf-8"

DEFAULT_CONFIG_CONTENT = r"""version: "1.0.0" # Don't touch here

# File locations
Paths:
  output_dir: "out"
  # Root directory for every artifact. Each subcommand writes into its own
  # subdirectory unless --out is given.

  rig: "builtin:desk"
  # Rig description: "builtin:desk", "builtin:prototype" or a path to a rig JSON
  # such as assets/rigs/prototype.json.

  log_file: "dsl.log"
  # Append-mode log file. Leave empty to log to the console only.

# General behaviour
Options:

  preset: ""
  # Built-in override bundle applied on top of this file:
  # desk, prototype, fwhm-study or noise-study.

  threads: 0
  # Worker threads for per-pixel work. 0 uses every physical core.
  # The DSL_THREADS environment variable caps this value.

  seed: 0
  # Root seed for noise and random scenes.

  debug_mode: false
  # Log DEBUG records to the console.

# Wavelength sampling
Spectra:
  start_nm: 430.0
  end_nm: 660.0
  step_nm: 5.0

  eta0: 0.5
  # Absolute zero-order efficiency used by the simulator.

  eta_first: [0.05, 0.2]
  # First-order efficiency at the first and last grid wavelength (linear ramp).

# Projected patterns
Patterns:
  line_width: 5
  # Scanline width w in projector pixels.

  shift: 2
  # Scanline step s between consecutive patterns.

  complementary: false
  # Follow each binary-code pattern with its inverse.

# First-order correspondence model
Correspondence:
  lattice_rows: 48
  lattice_cols: 85
  wavelengths: [430.0, 600.0, 610.0, 620.0, 640.0, 650.0, 660.0]
  depths: [500.0, 625.0, 750.0, 875.0, 1000.0]

  lut: false
  # Tabulate the fitted model over depth for faster queries.

  lut_step_mm: 1.0

# Forward simulation
Simulation:
  scene: "colorchecker"
  # Demo scene (colorchecker, bandpass, two-box, random-plane) or a scene manifest path.

  depth_mm: 800.0
  resolution: []
  # Camera-sized scenes when empty, otherwise [width, height].

  sigma: 0.0
  # Additive Gaussian noise on normalized intensities.

  hdr: false
  # Simulate a low/high capture pair per stack and merge them.

# Reconstruction
Reconstruction:
  tau: 0.5
  threshold_mode: "relative"
  min_contrast: 0.01
  depth_range: [300.0, 1500.0]

  system_model: "exact"
  # exact or narrowband first-order rows.

  orders: [-1, 1]
  kappa_lambda: 0.005
  kappa_sigma: 5.0
  kappa_interior: 0.9
  max_iterations: 1000

# Calibration captures
Calibration:
  depth_mm: 800.0
  target_reflectance: 0.99
  filter_width_nm: 10.0
  eta_step_nm: 10.0
  comb_period: 64
  comb_line_width: 3
  sample_depths: [500.0, 625.0, 750.0, 875.0, 1000.0]
  smoothness_weight: 0.005
  refinement_pixels: 96

# Evaluation protocols
Evaluation:
  sigmas: [0.0, 0.005, 0.01, 0.02, 0.03, 0.04]
  seeds: [0, 1, 2]
  stage_positions: 15
  stage_step_mm: 10.0
  stage_start_mm: 650.0
  probes: [[8, 8], [24, 8], [40, 40], [56, 56]]
"""


def merge_sections(user_cfg, default_cfg, prefix: str = "", dropped: Optional[List[str]] = None) -> CommentedMap:
    """
    Merges a user config into the defaults, keeping the defaults' section and key order.

    Sections merge recursively. Keys the defaults do not know are dropped and
    their dotted paths appended to `dropped`. A user scalar where the defaults
    hold a section is ignored. Comments come from the user file when present.
    """
    dropped = [] if dropped is None else dropped
    merged = CommentedMap()
    for key in user_cfg:
        if key not in default_cfg:
            dropped.append(f"{prefix}{key}")
    for key, default_val in default_cfg.items():
        path = f"{prefix}{key}"
        if key not in user_cfg:
            merged[key] = default_val
        elif isinstance(default_val, dict):
            if isinstance(user_cfg[key], dict):
                merged[key] = merge_sections(user_cfg[key], default_val, f"{path}.", dropped)
            else:
                func.log.warning("Config '%s' must be a section; keeping the defaults", path)
                merged[key] = default_val
        else:
            merged[key] = user_cfg[key]

        comments = getattr(user_cfg, "ca", None)
        if comments is None or key not in comments.items:
            comments = getattr(default_cfg, "ca", None)
        if comments is not None and key in comments.items:
            merged.ca.items[key] = comments.items[key]
    return merged


def check_preset(merged) -> Optional[str]:
    """Clears an Options.preset no built-in preset answers to; returns the cleared name."""
    from utils.experiment_config import BUILTIN_PRESETS

    options = merged.get("Options")
    preset = str(options.get("preset") or "") if isinstance(options, dict) else ""
    if not preset or preset in BUILTIN_PRESETS:
        return None
    func.log.warning("Unknown preset '%s' in the config; choose one of %s", preset, ", ".join(BUILTIN_PRESETS))
    options["preset"] = ""
    return preset


class ConfigManager:
    """
    Keeps config.yml in step with the built-in defaults.

    A missing file is written from the defaults. An older file is merged
    into the current layout: its values survive, unknown keys are dropped
    and a preset name that no longer exists is cleared.
    """

    def __init__(self, config_file="config.yml"):
        self.config_file = config_file
        self.default_config = yaml.load(DEFAULT_CONFIG_CONTENT)
        self.user_config = self.load_user_config()
        self.dropped: List[str] = []

    def load_user_config(self):
        """
        Returns:
            The parsed user configuration, or None when the file is missing or unreadable.
        """
        if not os.path.exists(self.config_file):
            return None
        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                data = yaml.load(f)
        except Exception as e:
            func.log.error("Error loading user configuration: %s", e)
            return None
        if data is not None and not isinstance(data, dict):
            func.log.error("Configuration '%s' is not a mapping of sections", self.config_file)
            return None
        return data if data is not None else CommentedMap()

    @property
    def default_version(self) -> str:
        return str(self.default_config.get("version"))

    def is_version_outdated(self):
        """True when the user file has no version or an older one than the defaults."""
        user_version = self.user_config.get("version") if self.user_config is not None else None
        if user_version is None:
            func.log.warning("No version found in user configuration. Assuming outdated.")
            return True
        try:
            return version.parse(str(user_version)) < version.parse(self.default_version)
        except version.InvalidVersion:
            func.log.warning("Unreadable config version '%s'. Assuming outdated.", user_version)
            return True

    def merge_configs(self):
        """User values over defaults, stamped with the default version."""
        if self.user_config is None:
            return self.default_config
        self.dropped = []
        merged = merge_sections(self.user_config, self.default_config, dropped=self.dropped)
        merged["version"] = self.default_config.get("version")
        for path in self.dropped:
            func.log.warning("Dropping unknown config key '%s'", path)
        check_preset(merged)
        return merged

    def _write(self, data) -> bool:
        try:
            with open(self.config_file, "w", encoding="utf-8") as f:
                yaml.dump(data, f)
            return True
        except OSError as e:
            func.log.critical("Failed to write configuration file: %s", e)
            return False

    def check_and_update(self) -> bool:
        """
        Creates the config file when missing and upgrades it when outdated.

        Returns:
            bool: True if the file was created or rewritten
        """
        if self.user_config is None:
            func.log.warning("Configuration file '%s' not found. Creating a new one...", self.config_file)
            if self._write(self.default_config):
                func.log.info("Configuration file '%s' created successfully!", self.config_file)
                return True
            return False

        if self.is_version_outdated():
            func.log.warning("Upgrading configuration '%s' to version %s", self.config_file, self.default_version)
            if self._write(self.merge_configs()):
                func.log.info("Configuration file '%s' upgraded (%d unknown keys dropped)",
                              self.config_file, len(self.dropped))
                return True
            return False

        func.log.debug("Configuration file '%s' is up to date.", self.config_file)
        return False
