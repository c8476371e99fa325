"""
Correspondence samples from bandpass scanline captures.

At a fixed depth and filter wavelength, the intensity trace of a pixel over
the scanline sweep peaks once per order that reaches it. The tallest peak
is the zero order; a secondary peak earlier in the sweep belongs to m = -1
and a later one to m = +1. Peak frames convert to projector columns through
the scanline geometry.

Classes:
    - ExtractionReport: Samples plus skip diagnostics

Functions:
    - trace_peaks(): Peak frames and heights of one trace
    - peak_column(): Sub-frame column of a peak
    - extract_correspondence_samples(): Samples at lattice pixels
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.signal import find_peaks

from calibration.bandpass import CalibrationCapture
from correspondence.model import CorrespondenceGrids
from correspondence.sampling import CorrespondenceSample, samples_from_list
from patterns.scanline import ScanlineSpec
from reconstruction.system import scanline_spec
from utils.error_types import DomainError
from utils.workers import run_chunked

log = logging.getLogger(__name__)

PEAK_MEDIAN_FACTOR = 3.0
MIN_PEAK_HEIGHT = 1e-3


@dataclass(frozen=True)
class ExtractionReport:
    """
    Attributes:
        samples: Extracted first-order samples, sorted by depth, wavelength, pixel and order
        skipped: Reason → number of (pixel, depth, wavelength) traces skipped
    """
    samples: List[CorrespondenceSample] = field(repr=False)
    skipped: Dict[str, int] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return samples_from_list(self.samples)


def trace_peaks(trace: np.ndarray, line_width: int,
                min_height: float = MIN_PEAK_HEIGHT) -> Tuple[np.ndarray, np.ndarray]:
    """Frames and heights of peaks above max(3 × median, min_height), at least w frames apart."""
    trace = np.asarray(trace, dtype=np.float64)
    threshold = max(PEAK_MEDIAN_FACTOR * float(np.median(trace)), min_height)
    peaks, props = find_peaks(trace, height=threshold, distance=max(1, line_width))
    return peaks, props["peak_heights"]


def peak_column(trace: np.ndarray, peak: int, spec: ScanlineSpec) -> float:
    """
    Intensity-weighted centroid of the frames around a peak, as a column.

    Frames i lighting column q satisfy s·i ≤ q < s·i + w, so a centroid ī
    maps back to q = s·ī + (w − 1) / 2.
    """
    radius = -(-spec.line_width // spec.shift)
    lo, hi = max(0, peak - radius), min(len(trace), peak + radius + 1)
    window = np.clip(np.asarray(trace[lo:hi], dtype=np.float64), 0.0, None)
    window = np.where(window >= 0.25 * trace[peak], window, 0.0)
    index = np.arange(lo, hi)
    centroid = float(np.sum(index * window) / np.sum(window))
    return spec.shift * centroid + 0.5 * (spec.line_width - 1)


def _classify(trace: np.ndarray, spec: ScanlineSpec, min_height: float) -> Tuple[Dict[int, float], str]:
    peaks, heights = trace_peaks(trace, spec.line_width, min_height)
    if peaks.size == 0:
        return {}, "dark"
    if peaks.size < 2:
        return {}, "single_peak"
    zero = int(np.argmax(heights))
    found = {}
    for m, side in ((-1, peaks < peaks[zero]), (1, peaks > peaks[zero])):
        if np.any(side):
            candidates = np.flatnonzero(side)
            best = candidates[np.argmax(heights[candidates])]
            found[m] = peak_column(trace, int(peaks[best]), spec)
    return found, ""


def extract_correspondence_samples(captures: Sequence[CalibrationCapture], grids: CorrespondenceGrids,
                                   orders: Sequence[int] = (-1, 1), min_height: float = MIN_PEAK_HEIGHT,
                                   n_jobs: int = 1) -> ExtractionReport:
    """
    Locates first-order columns at every lattice pixel.

    Args:
        captures: Scanline captures of the flat target, one per depth
        grids: Lattice whose node pixels are sampled
        orders: First orders to emit
        min_height: Absolute peak floor
        n_jobs: Worker threads

    Returns:
        ExtractionReport
    """
    nodes = grids.node_pixels.reshape(-1, 2).astype(np.int64)
    samples: List[CorrespondenceSample] = []
    skipped: Dict[str, int] = {}
    for capture in captures:
        for stack, bandpass in zip(capture.stacks, capture.filters):
            if stack.kind != "scanline":
                raise DomainError(f"correspondence extraction needs scanline stacks, got '{stack.kind}'")
            spec = scanline_spec(stack)
            height, width = stack.shape
            if np.any(nodes[:, 0] >= width) or np.any(nodes[:, 1] >= height):
                raise DomainError("lattice pixels fall outside the captured frames")
            traces = stack.frames[:, nodes[:, 1], nodes[:, 0]].sum(axis=-1).T

            def extract(start, stop, traces=traces, spec=spec):
                return [_classify(traces[i], spec, min_height) for i in range(start, stop)]

            results = [r for part in run_chunked(extract, nodes.shape[0], n_jobs, 512) for r in part]
            for (x, y), (found, reason) in zip(nodes, results):
                if reason:
                    skipped[reason] = skipped.get(reason, 0) + 1
                    continue
                for m in orders:
                    if m in found:
                        samples.append(CorrespondenceSample(float(x), float(y), capture.depth_mm, m,
                                                            bandpass.center_nm, found[m]))
                    else:
                        skipped[f"missing_m{m:+d}"] = skipped.get(f"missing_m{m:+d}", 0) + 1

    samples.sort(key=lambda s: (s.z_mm, s.lambda_nm, s.py, s.px, s.m))
    if skipped:
        log.info("Skipped traces: %s", ", ".join(f"{k}={v}" for k, v in sorted(skipped.items())))
    log.info("Extracted %d correspondence samples from %d captures", len(samples), len(captures))
    return ExtractionReport(samples, skipped)
