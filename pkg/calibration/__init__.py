"""
Calibration from bandpass captures: efficiency, response curves, correspondence samples.
"""

from calibration.bandpass import (
    ETA_FILTER_CENTERS,
    TARGET_REFLECTANCE,
    BandpassFilter,
    CalibrationCapture,
    filtered_responses,
    flat_target,
    simulate_capture,
)
from calibration.efficiency import EtaEstimate, estimate_eta, order_predictions, order_ratios
from calibration.responses import (
    RefinementData,
    RefinementResult,
    collect_refinement_observations,
    curve_roughness,
    pattern_weights,
    refine_responses,
)
from calibration.samples import ExtractionReport, extract_correspondence_samples, peak_column, trace_peaks

__all__ = [
    "ETA_FILTER_CENTERS",
    "TARGET_REFLECTANCE",
    "BandpassFilter",
    "CalibrationCapture",
    "filtered_responses",
    "flat_target",
    "simulate_capture",
    "EtaEstimate",
    "estimate_eta",
    "order_predictions",
    "order_ratios",
    "RefinementData",
    "RefinementResult",
    "collect_refinement_observations",
    "curve_roughness",
    "pattern_weights",
    "refine_responses",
    "ExtractionReport",
    "extract_correspondence_samples",
    "peak_column",
    "trace_peaks",
]
