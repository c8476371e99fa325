"""
Reconstruction: depth from binary codes, spectra from scanlines.
"""

from reconstruction.depth import (
    DEFAULT_DEPTH_RANGE,
    DecodedCodes,
    DepthMap,
    decode_binary,
    reconstruct_depth,
    triangulate,
    triangulate_many,
)
from reconstruction.pipeline import (
    HyperspectralImage,
    reconstruct,
    reconstruct_hyperspectral,
    save_depth_map,
    save_hyperspectral,
)
from reconstruction.solver import (
    SolveResult,
    difference_operator,
    regularized_gram,
    solve_pixel,
    solve_quadratic,
    system_normal_equations,
)
from reconstruction.system import (
    SYSTEM_MODELS,
    SystemBatch,
    SystemMatrix,
    build_system,
    build_system_batch,
    scanline_spec,
)
from reconstruction.sweeps import (
    DecodingSetup,
    binary_patterns,
    decoding_error,
    noise_sweep,
    translation_stage_sweep,
)
from reconstruction.weights import KappaWeights, compute_kappa, zero_order_only

__all__ = [
    "DEFAULT_DEPTH_RANGE",
    "DecodedCodes",
    "DepthMap",
    "decode_binary",
    "triangulate",
    "triangulate_many",
    "reconstruct_depth",
    "SYSTEM_MODELS",
    "SystemMatrix",
    "SystemBatch",
    "build_system",
    "build_system_batch",
    "scanline_spec",
    "KappaWeights",
    "compute_kappa",
    "zero_order_only",
    "SolveResult",
    "difference_operator",
    "regularized_gram",
    "solve_quadratic",
    "solve_pixel",
    "system_normal_equations",
    "HyperspectralImage",
    "reconstruct_hyperspectral",
    "reconstruct",
    "save_depth_map",
    "save_hyperspectral",
    "DecodingSetup",
    "binary_patterns",
    "decoding_error",
    "noise_sweep",
    "translation_stage_sweep",
]
