"""
Forward simulation: scenes, rendering, noise and HDR captures.
"""

from simulation.demo_scenes import (
    DEMO_SCENES,
    bandpass_scene,
    boxcar,
    build_demo_scene,
    colorchecker_scene,
    colorchecker_spectra,
    random_plane_scene,
    smooth_reflectance,
    two_box_scene,
)
from simulation.geometry import PixelGeometry, trace_geometry
from simulation.hdr import HDRSettings, hat_weight, merge_hdr, simulate_hdr_pair
from simulation.noise import DEFAULT_SIGMA, add_noise, frame_generators
from simulation.renderer import (
    Illumination,
    auto_exposure,
    prepare_illumination,
    render,
    render_illuminated,
    render_stack,
    spectral_illumination,
)
from simulation.scene import Scene, load_scene, save_scene
from simulation.stack import CaptureStack, load_stack, save_stack

__all__ = [
    "Scene",
    "load_scene",
    "save_scene",
    "CaptureStack",
    "load_stack",
    "save_stack",
    "PixelGeometry",
    "trace_geometry",
    "Illumination",
    "prepare_illumination",
    "spectral_illumination",
    "render",
    "render_illuminated",
    "render_stack",
    "auto_exposure",
    "DEFAULT_SIGMA",
    "add_noise",
    "frame_generators",
    "HDRSettings",
    "hat_weight",
    "simulate_hdr_pair",
    "merge_hdr",
    "DEMO_SCENES",
    "build_demo_scene",
    "colorchecker_scene",
    "colorchecker_spectra",
    "bandpass_scene",
    "two_box_scene",
    "random_plane_scene",
    "smooth_reflectance",
    "boxcar",
]
