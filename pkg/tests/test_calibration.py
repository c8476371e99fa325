import numpy as np
import pytest
from scipy.ndimage import gaussian_filter1d

from calibration.bandpass import (
    BandpassFilter,
    CalibrationCapture,
    filtered_responses,
    flat_target,
    simulate_capture,
)
from calibration.efficiency import estimate_eta
from calibration.responses import (
    RefinementData,
    collect_refinement_observations,
    curve_roughness,
    pattern_weights,
    refine_responses,
)
from calibration.samples import extract_correspondence_samples, peak_column, trace_peaks
from patterns.pattern_set import Pattern, PatternTag
from patterns.scanline import ScanlineSpec, gen_comb
from reconstruction.sweeps import binary_patterns
from simulation.geometry import PixelGeometry
from simulation.renderer import render_stack
from simulation.stack import CaptureStack
from spectra.curves import ResponseSet
from utils.error_types import DomainError

SPEC = ScanlineSpec(640, 5, 2)


def box_trace(columns_and_heights, count=SPEC.count):
    """Scanline trace of a pixel lit at the given projector columns."""
    trace = np.zeros(count)
    for column, height in columns_and_heights:
        for i in range(count):
            if SPEC.lit(i, np.array([column]))[0]:
                trace[i] += height
    return trace


def test_peak_column_recovers_center():
    trace = box_trace([(100, 1.0)])
    peaks, heights = trace_peaks(trace, SPEC.line_width)
    assert peaks.tolist() == [49]
    assert heights[0] == pytest.approx(1.0)
    assert peak_column(trace, 49, SPEC) == pytest.approx(100.0)


def test_trace_peaks_ignores_dark_trace():
    peaks, _ = trace_peaks(np.full(SPEC.count, 1e-5), SPEC.line_width)
    assert peaks.size == 0


def test_extract_samples_from_synthetic_stack(small_grids):
    trace = box_trace([(100, 0.2), (300, 1.0), (520, 0.3)])
    frames = np.broadcast_to(trace[:, None, None, None], (SPEC.count, 64, 64, 3)).copy()
    stack = CaptureStack(frames, tuple(PatternTag("scanline", i) for i in range(SPEC.count)), "scanline",
                         {"resolution": [640, 480], "w": 5, "s": 2})
    capture = CalibrationCapture((stack,), (BandpassFilter(600.0),), 750.0)
    report = extract_correspondence_samples([capture], small_grids)
    assert not report.skipped
    frame = report.to_frame()
    assert len(frame) == 2 * small_grids.nx * small_grids.ny
    minus = frame[frame["m"] == -1]["q_col"].to_numpy()
    plus = frame[frame["m"] == 1]["q_col"].to_numpy()
    np.testing.assert_allclose(minus, 100.0)
    np.testing.assert_allclose(plus, 520.0)
    assert set(frame["z_mm"]) == {750.0}
    assert set(frame["lambda_nm"]) == {600.0}


def test_extract_skips_single_peak(small_grids):
    trace = box_trace([(300, 1.0)])
    frames = np.broadcast_to(trace[:, None, None, None], (SPEC.count, 64, 64, 3)).copy()
    stack = CaptureStack(frames, tuple(PatternTag("scanline", i) for i in range(SPEC.count)), "scanline",
                         {"resolution": [640, 480], "w": 5, "s": 2})
    report = extract_correspondence_samples([CalibrationCapture((stack,), (BandpassFilter(600.0),), 750.0)],
                                            small_grids)
    assert report.samples == []
    assert report.skipped == {"single_peak": small_grids.nx * small_grids.ny}


def test_filtered_responses_keep_one_band(responses, grid):
    filtered = filtered_responses(responses, BandpassFilter(550.0))
    emission = filtered.proj_matrix
    assert np.count_nonzero(emission.sum(axis=0)) == 1
    assert emission[:, grid.index_of(550.0)].sum() > 0
    with pytest.raises(DomainError):
        filtered_responses(responses, BandpassFilter(700.0))


def test_capture_validation(grid):
    with pytest.raises(DomainError):
        CalibrationCapture((), (BandpassFilter(500.0),), 800.0)
    with pytest.raises(DomainError):
        CalibrationCapture((), (), 800.0, target_reflectance=1.5)
    assert flat_target((2, 3), 700.0, grid).cube.shape == (2, 3, grid.count)


def test_eta_ratios_from_comb_captures(desk, small_model, responses, eta):
    comb = gen_comb((640, 480), period=64, line_width=3, offsets=(0, 16, 32, 48))
    centers = (500.0, 560.0, 620.0)
    capture = simulate_capture(comb, desk, small_model, responses, eta, centers, 800.0)
    estimate = estimate_eta(capture, comb, desk, small_model, responses)
    truth = eta.normalized()
    assert set(estimate.eta.uncalibrated) != {-1, 1}
    for m in (-1, 1):
        if m in estimate.eta.uncalibrated:
            continue
        for center in centers:
            k = responses.grid.index_of(center)
            assert estimate.eta.values(m)[k] == pytest.approx(truth.values(m)[k], rel=1e-4)
    np.testing.assert_allclose(estimate.eta.values(0), 1.0)
    assert set(estimate.table.columns) == {"center_nm", "m", "ratio", "eta", "pixels"}


def test_refinement_lowers_data_loss(desk, small_model, responses, eta, tiny_scene):
    patterns = binary_patterns((640, 480))
    stack = render_stack(patterns, tiny_scene, desk, small_model, responses, eta)
    data = collect_refinement_observations(stack, patterns, tiny_scene, desk, small_model, eta, responses,
                                           max_pixels=64)
    assert len(data) == 64 * len(patterns)
    # the true curves explain the clean stack
    assert np.allclose(data.predict(responses.cam_matrix, responses.proj_matrix), data.intensities)

    nominal = ResponseSet.from_matrices(responses.grid,
                                        gaussian_filter1d(responses.cam_matrix, 1.5, axis=1),
                                        gaussian_filter1d(responses.proj_matrix, 1.5, axis=1))
    result = refine_responses(nominal, data, max_iterations=60)
    assert result.data_loss < result.initial_data_loss
    assert all(b <= a for a, b in zip(result.history, result.history[1:]))
    assert curve_roughness(nominal) < curve_roughness(responses)


def test_refinement_rejects_negative_weight(responses):
    data = RefinementData(np.ones((1, 3, responses.grid.count)), np.ones((1, 3)))
    with pytest.raises(DomainError):
        refine_responses(responses, data, w=-1.0)


def test_pattern_weights_skip_order_leaving_projector(grid):
    right = Pattern(640, 480, PatternTag("scanline", 0), lambda r, c: (c >= 600).astype(np.float64))
    eta = {0: np.ones(grid.count), 1: np.full(grid.count, 0.2)}

    def weights(plus_cols):
        geometry = PixelGeometry(np.zeros((1, 2)), np.array([800.0]), np.array([800.0]),
                                 np.array([[100.0, 240.0]]), {1: np.asarray(plus_cols)[None]},
                                 grid, np.zeros(1, dtype=np.uint8))
        return pattern_weights(right, geometry, eta)

    assert np.all(weights(np.linspace(600.0, 700.0, grid.count)) == 0.0)
    inside = weights(np.linspace(600.0, 630.0, grid.count))
    np.testing.assert_allclose(inside, 0.2)
    assert inside.shape == (1, 3, grid.count)
