import numpy as np
import pytest

from correspondence.blob import decode_model, encode_model, load_model, save_model
from correspondence.model import (
    CorrespondenceGrids,
    build_lut,
    columns_on_grid,
    order_validity,
    query,
    query_many,
    valid_orders,
    validate,
)
from correspondence.power_law import evaluate_power_law, fit_power_law, fit_power_law_batch
from correspondence.sampling import frame_to_samples, samples_to_frame
from correspondence.scanline_index import px2index, px2index_many
from correspondence.zero_order import zero_order
from patterns.scanline import ScanlineSpec
from utils.error_types import (
    CorrespondenceRangeError,
    CoverageError,
    DependencyError,
    DomainError,
    ParseError,
    PixelFlag,
)

DEPTHS = np.array([500.0, 625.0, 750.0, 875.0, 1000.0])


def test_power_law_recovers_coefficients():
    q = evaluate_power_law(3.0e4, -0.8, 120.0, DEPTHS)
    fit = fit_power_law(DEPTHS, q)
    assert fit.alpha == pytest.approx(3.0e4, rel=1e-6)
    assert fit.beta == pytest.approx(-0.8, rel=1e-6)
    assert fit.gamma == pytest.approx(120.0, rel=1e-6)
    assert fit.rms < 1e-6
    np.testing.assert_allclose(fit(DEPTHS), q, atol=1e-6)


def test_power_law_needs_four_depths():
    with pytest.raises(DomainError):
        fit_power_law(DEPTHS[:3], np.ones(3))
    with pytest.raises(DomainError):
        fit_power_law(np.array([500.0, 500.0, 600.0, 600.0]), np.ones(4))


def test_power_law_batch_matches_single_fit():
    Q = np.stack([
        evaluate_power_law(3.0e4, -0.8, 120.0, DEPTHS),
        evaluate_power_law(-50.0, 0.5, 600.0, DEPTHS),
    ])
    coefficients, rms, _ = fit_power_law_batch(DEPTHS, Q)
    np.testing.assert_allclose(coefficients[0], (3.0e4, -0.8, 120.0), rtol=1e-5)
    np.testing.assert_allclose(coefficients[1], (-50.0, 0.5, 600.0), rtol=1e-5)
    assert np.all(rms < 1e-5)


def test_power_law_batch_too_few_samples_is_nan():
    Q = evaluate_power_law(3.0e4, -0.8, 120.0, DEPTHS)[None].copy()
    Q[0, :2] = np.nan
    coefficients, rms, _ = fit_power_law_batch(DEPTHS, Q)
    assert np.isnan(coefficients).all()
    assert np.isnan(rms[0])


def test_lattice_nodes_for_desk_camera(small_grids):
    assert small_grids.nx == 8 and small_grids.ny == 8
    assert small_grids.dx == 9.0
    np.testing.assert_allclose(small_grids.xs, np.arange(0, 64, 9))


def test_grids_need_four_depths():
    with pytest.raises(DomainError):
        CorrespondenceGrids(0, 1, 2, 0, 1, 2, depths=(500.0, 600.0, 700.0))


def test_query_at_node_is_fitted_power_law(small_model, small_grids):
    j = small_grids.wavelengths.index(610.0)
    node = small_grids.node_pixels[3, 2]
    z = 810.0
    alpha, beta, gamma = small_model.coefficients[small_model.order_index(1), 3, 2, j]
    expected = evaluate_power_law(alpha, beta, gamma, z)
    assert query(node, z, 1, 610.0, small_model) == pytest.approx(expected, abs=1e-9)


def test_query_close_to_exact_solve(small_model, desk, small_grids):
    pixels = np.array([[4.5, 7.0], [31.5, 31.5], [50.0, 12.0]])
    report = validate(small_model, desk, pixels, [600.0, 800.0, 950.0], small_grids.wavelengths)
    assert report.count > 0
    assert report.max_error < 1.0


def test_query_rejects_zero_order(small_model):
    with pytest.raises(DomainError):
        query((10.0, 10.0), 800.0, 0, 550.0, small_model)


def test_query_beyond_margin(small_model):
    with pytest.raises(CorrespondenceRangeError):
        query((10.0, 10.0), 2000.0, 1, 550.0, small_model)
    q, flags = query_many(small_model, np.array([[10.0, 10.0]]), np.array([2000.0]), 1, 550.0)
    assert np.isnan(q[0])
    assert flags[0] == PixelFlag.OUT_OF_HULL


def test_query_within_margin_is_flagged(small_model):
    # margin is a tenth of the 500 mm depth range
    q, flags = query_many(small_model, np.array([[10.0, 10.0], [10.0, 10.0]]),
                          np.array([480.0, 700.0]), 1, 620.0)
    assert np.all(np.isfinite(q))
    assert flags[0] == PixelFlag.OUT_OF_HULL
    assert flags[1] == PixelFlag.OK


def test_columns_on_grid_matches_queries(small_model, grid):
    pixels = np.array([[12.0, 20.0], [40.0, 44.0]])
    z = np.array([700.0, 900.0])
    cols = columns_on_grid(small_model, pixels, z, -1, grid)
    for k, lam in enumerate(grid.wavelengths):
        expected, _ = query_many(small_model, pixels, z, -1, lam)
        np.testing.assert_allclose(cols[:, k], expected, atol=1e-9)


def test_first_orders_straddle_zero_order(small_model, desk, grid):
    z = 800.0
    p = (31.5, 31.5)
    zero = zero_order(p, z, desk)[0]
    assert query(p, z, 1, 600.0, small_model) > zero
    assert query(p, z, -1, 600.0, small_model) < zero
    assert set(valid_orders(p, z, small_model, desk, grid)) <= {-1, 1}


def test_order_validity_side_and_bounds():
    cols = np.array([[10.0, 20.0], [10.0, 700.0], [5.0, 50.0]])
    zero = np.array([30.0, 30.0, 20.0])
    np.testing.assert_array_equal(order_validity(cols, zero, -1, 640), [True, False, False])
    np.testing.assert_array_equal(order_validity(cols, np.array([0.0, 0.0, 0.0]), 1, 640),
                                  [True, False, True])


def test_lut_agrees_with_power_law(small_model):
    with_lut = build_lut(small_model, depth_step_mm=1.0)
    assert with_lut.has_lut
    pixels = np.array([[5.0, 5.0], [33.3, 21.7], [60.0, 58.0]])
    z = np.array([512.4, 777.3, 993.9])
    direct, _ = query_many(small_model, pixels, z, 1, 625.0)
    tabulated, _ = query_many(with_lut, pixels, z, 1, 625.0)
    assert np.max(np.abs(direct - tabulated)) < 1e-3


def test_blob_round_trip(small_model, tmp_path):
    path = tmp_path / "model.dslc"
    save_model(build_lut(small_model, 5.0), str(path))
    loaded = load_model(str(path))
    assert loaded.grids == small_model.grids
    assert loaded.orders == small_model.orders
    assert not loaded.has_lut
    np.testing.assert_array_equal(loaded.coefficients, small_model.coefficients)
    np.testing.assert_array_equal(loaded.samples, small_model.samples)


def test_blob_bad_magic(small_model):
    data = b"XXXX" + encode_model(small_model)[4:]
    with pytest.raises(ParseError) as info:
        decode_model(data)
    assert info.value.offset == 0


def test_blob_truncated_reports_offset(small_model):
    data = encode_model(small_model)
    with pytest.raises(ParseError) as info:
        decode_model(data[:-8])
    assert 0 < info.value.offset < len(data)


def test_blob_trailing_bytes(small_model):
    with pytest.raises(ParseError):
        decode_model(encode_model(small_model) + b"\x00")


def test_load_missing_model(tmp_path):
    with pytest.raises(DependencyError):
        load_model(str(tmp_path / "absent.dslc"))


def test_sample_table_round_trip(small_model, small_grids):
    frame = samples_to_frame(small_grids, small_model.orders, small_model.samples)
    assert list(frame.columns) == ["px", "py", "z_mm", "m", "lambda_nm", "q_col"]
    dense = frame_to_samples(frame, small_grids, small_model.orders)
    np.testing.assert_allclose(dense, small_model.samples, equal_nan=True)


def test_frame_to_samples_drops_off_lattice_rows(small_model, small_grids):
    frame = samples_to_frame(small_grids, small_model.orders, small_model.samples).head(3).copy()
    frame.loc[0, "px"] = 4.5
    dense = frame_to_samples(frame, small_grids, small_model.orders)
    assert np.isfinite(dense).sum() == 2


def test_px2index_examples():
    spec = ScanlineSpec(640, 5, 2)
    assert spec.count == 318
    assert px2index(0.0, spec) == 0
    assert px2index(2.0, spec) == 0
    # column 4 is covered by lines 0, 1 and 2; line 1 is centered on it
    assert px2index(4.0, spec) == 1
    assert px2index(639.0, spec) == 317
    with pytest.raises(CoverageError):
        px2index(640.0, spec)


def test_px2index_many_marks_outside():
    spec = ScanlineSpec(640, 5, 2)
    out = px2index_many(np.array([-3.0, np.nan, 100.4, 700.0]), spec)
    np.testing.assert_array_equal(out, [-1, -1, 49, -1])
