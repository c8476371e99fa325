import numpy as np
import pytest

from spectra.analysis import decoding_margin, emitted_radiance, fwhm, smoothness
from spectra.curves import (
    EfficiencySet,
    ResponseSet,
    default_efficiency,
    flat_efficiency,
    flat_responses,
    restrict_orders,
)
from spectra.grid import SpectralCurve, WavelengthGrid, resample, resample_values
from spectra.srgb import to_srgb
from utils.error_types import DomainError, SpectralRangeError, UndefinedMetricError


def ramp_curve(grid):
    w = grid.wavelengths
    return SpectralCurve(grid, (w - grid.start_nm) / (grid.end_nm - grid.start_nm))


def test_grid_counts_endpoints():
    grid = WavelengthGrid(430.0, 660.0, 5.0)
    assert grid.count == 47
    assert grid.wavelengths[0] == 430.0
    assert grid.wavelengths[-1] == 660.0
    assert grid.index_of(547.4) == 23


def test_grid_rejects_bad_step():
    with pytest.raises(DomainError):
        WavelengthGrid(430.0, 660.0, 0.0)
    with pytest.raises(DomainError):
        WavelengthGrid(430.0, 660.0, 7.0)


def test_grid_from_wavelengths():
    grid = WavelengthGrid.from_wavelengths([500, 510, 520, 530])
    assert grid == WavelengthGrid(500.0, 530.0, 10.0)
    with pytest.raises(DomainError):
        WavelengthGrid.from_wavelengths([500, 510, 525])


def test_curve_rejects_negative_when_required(grid):
    values = np.zeros(grid.count)
    values[3] = -0.1
    with pytest.raises(DomainError):
        SpectralCurve(grid, values, non_negative=True)
    with pytest.raises(DomainError):
        SpectralCurve(grid, np.zeros(grid.count + 1))


def test_resample_ramp_midpoint(grid):
    fine = WavelengthGrid(430.0, 660.0, 1.0)
    curve = resample(ramp_curve(grid), fine)
    assert curve.grid == fine
    assert curve.at(545.0) == pytest.approx(0.5)


def test_resample_same_grid_is_identity(grid):
    curve = ramp_curve(grid)
    assert resample(curve, grid) is curve


def test_resample_clamps_outside_source():
    source = WavelengthGrid(500.0, 600.0, 10.0)
    curve = SpectralCurve(source, np.linspace(1.0, 2.0, source.count))
    wide = resample(curve, WavelengthGrid(450.0, 650.0, 10.0))
    assert wide.values[0] == pytest.approx(1.0)
    assert wide.values[-1] == pytest.approx(2.0)


def test_resample_disjoint_raises():
    curve = SpectralCurve.constant(WavelengthGrid(400.0, 450.0, 10.0), 1.0)
    with pytest.raises(SpectralRangeError):
        resample(curve, WavelengthGrid(500.0, 600.0, 10.0))


def test_resample_values_last_axis(grid):
    fine = WavelengthGrid(430.0, 660.0, 5.0)
    cube = np.tile(ramp_curve(grid).values, (2, 3, 1))
    out = resample_values(cube, grid, fine)
    assert out.shape == (2, 3, fine.count)
    assert out[1, 2, fine.index_of(545.0)] == pytest.approx(0.5)


def test_emitted_radiance_sums_channels(grid):
    proj = np.array([[0.2], [0.5], [0.1]]) * np.ones((3, grid.count))
    responses = ResponseSet.from_matrices(grid, np.ones((3, grid.count)), proj)
    assert emitted_radiance((1, 1, 1), responses, 550.0) == pytest.approx(0.8)
    assert emitted_radiance((1, 0, 0), responses, 550.0) == pytest.approx(0.2)


def test_emitted_radiance_rejects_out_of_range(grid):
    responses = flat_responses(grid)
    with pytest.raises(DomainError):
        emitted_radiance((1.2, 0, 0), responses, 550.0)
    with pytest.raises(DomainError):
        emitted_radiance((1, 0), responses, 550.0)


def test_decoding_margin_flat_curves(grid):
    responses = flat_responses(grid)
    eta = flat_efficiency(grid, 0.5, 0.2)
    margin = decoding_margin(SpectralCurve.constant(grid, 1.0), responses, eta)
    np.testing.assert_allclose(margin.off_max / margin.on_min, 0.8)
    assert margin.safe


def test_decoding_margin_unsafe_when_first_orders_dominate(grid):
    responses = flat_responses(grid)
    eta = flat_efficiency(grid, 0.2, 0.3)
    margin = decoding_margin(SpectralCurve.constant(grid, 1.0), responses, eta)
    assert not margin.safe


def test_decoding_margin_batched(grid, responses, eta):
    H = np.full((4, grid.count), 0.5)
    margin = decoding_margin(H, responses, eta)
    assert margin.on_min.shape == (4, 3)


def test_fwhm_boxcar():
    w = np.arange(500.0, 601.0)
    values = np.where((w >= 550) & (w <= 559), 1.0, 0.0)
    assert fwhm(values, w) == pytest.approx(10.0)


def test_fwhm_gaussian():
    grid = WavelengthGrid(430.0, 660.0, 1.0)
    w = grid.wavelengths
    curve = SpectralCurve(grid, np.exp(-0.5 * ((w - 545.0) / 8.0) ** 2))
    assert fwhm(curve) == pytest.approx(18.84, abs=0.05)


def test_fwhm_runs_to_boundary():
    w = np.arange(500.0, 511.0)
    values = np.linspace(1.0, 0.0, w.size)
    # peak at the first sample: left edge is the grid start
    assert fwhm(values, w) == pytest.approx(5.0)


def test_fwhm_undefined_for_zero_curve(grid):
    with pytest.raises(UndefinedMetricError):
        fwhm(np.zeros(grid.count), grid.wavelengths)


def test_smoothness():
    assert smoothness(np.array([0.0, 1.0, 3.0])) == pytest.approx(5.0)
    np.testing.assert_allclose(smoothness(np.ones((2, 5))), 0.0)


def test_efficiency_normalized(grid, eta):
    normalized = eta.normalized()
    np.testing.assert_allclose(normalized.values(0), 1.0)
    np.testing.assert_allclose(normalized.values(1), eta.values(1) / 0.5)


def test_efficiency_requires_zero_order(grid):
    with pytest.raises(DomainError):
        EfficiencySet({1: SpectralCurve.constant(grid, 0.1)})


def test_restrict_orders_keeps_zero(eta):
    only_plus = restrict_orders(eta, [1])
    assert only_plus.orders == (0, 1)
    np.testing.assert_allclose(only_plus.values(-1), 0.0)
    assert restrict_orders(eta, None) is eta


def test_default_efficiency_ramp(grid):
    eta = default_efficiency(grid, eta0=0.4, first_range=(0.1, 0.3))
    assert eta.values(1)[0] == pytest.approx(0.1)
    assert eta.values(-1)[-1] == pytest.approx(0.3)
    np.testing.assert_allclose(eta.values(0), 0.4)


def test_srgb_flat_spectrum_is_neutral(grid):
    cube = np.full((2, 2, grid.count), 0.5)
    rgb = to_srgb(cube, grid)
    assert rgb.shape == (2, 2, 3)
    np.testing.assert_allclose(rgb[..., 0], rgb[..., 1], atol=1e-9)
    np.testing.assert_allclose(rgb[..., 1], rgb[..., 2], atol=1e-9)
    assert rgb[0, 0, 0] == pytest.approx(1.055 * 0.5 ** (1 / 2.4) - 0.055)


def test_srgb_clips():
    grid = WavelengthGrid(430.0, 660.0, 10.0)
    rgb = to_srgb(np.full((1, 1, grid.count), 5.0), grid)
    np.testing.assert_allclose(rgb, 1.0)
