import json

import numpy as np
import pytest

from utils.error_types import DependencyError, DomainError, ParseError, UndefinedMetricError
from utils.metrics import (
    METRICS_SCHEMA,
    depth_error,
    metamer_pair,
    probe_spectra,
    relative_depth,
    spectral_angle,
    spectral_rmse,
    write_metrics,
)
from utils.persistence import read_json, write_json
from utils.workers import chunk_ranges, concat, run_chunked


def test_depth_error_ignores_invalid_pixels():
    truth = np.full((2, 2), 800.0)
    estimate = np.array([[801.0, 797.0], [np.nan, 800.0]])
    error = depth_error(estimate, truth)
    assert error.count == 3
    assert error.mean_abs_mm == pytest.approx(4.0 / 3.0)
    assert error.median_abs_mm == pytest.approx(1.0)


def test_depth_error_empty_mask():
    with pytest.raises(UndefinedMetricError):
        depth_error(np.full((2, 2), np.nan), np.ones((2, 2)))
    with pytest.raises(DomainError):
        depth_error(np.ones((2, 2)), np.ones((3, 2)))


def test_spectral_rmse_and_angle(grid):
    truth = np.full((2, 2, grid.count), 0.5)
    estimate = truth * 2.0
    assert spectral_rmse(estimate, truth) == pytest.approx(0.5)
    # scaling leaves the angle at zero
    assert spectral_angle(estimate, truth) == pytest.approx(0.0, abs=1e-7)
    mask = np.array([[True, False], [False, False]])
    assert spectral_rmse(estimate, truth, mask) == pytest.approx(0.5)


def test_spectral_angle_of_zero_spectra(grid):
    with pytest.raises(UndefinedMetricError):
        spectral_angle(np.zeros((1, 1, grid.count)), np.ones((1, 1, grid.count)))


def test_relative_depth():
    depth = np.array([[800.0, 1000.0], [801.0, np.nan]])
    a = np.array([[True, False], [True, False]])
    assert relative_depth(depth, a, ~a) == pytest.approx(199.5)
    with pytest.raises(UndefinedMetricError):
        relative_depth(depth, a, np.zeros_like(a))


def test_probe_spectra_columns(grid):
    cube = np.random.default_rng(0).uniform(size=(4, 5, grid.count))
    table = probe_spectra(cube, grid, [(1, 2)], truth=cube)
    assert list(table.columns) == ["wavelength_nm", "est_1_2", "gt_1_2"]
    np.testing.assert_allclose(table["est_1_2"], cube[2, 1])
    with pytest.raises(DomainError):
        probe_spectra(cube, grid, [(5, 0)])


def test_metamer_pair_is_camera_metameric(grid, responses):
    base = np.full(grid.count, 0.4)
    H1, H2 = metamer_pair(base, responses)
    weights = responses.cam_matrix * responses.proj_total[None]
    np.testing.assert_allclose(weights @ H1, weights @ H2, rtol=1e-8, atol=1e-10)
    assert np.max(np.abs(H1 - H2)) > 0.05
    assert H2.min() >= 0.0 and H2.max() <= 1.5


def test_write_metrics_schema_and_sorted_keys(tmp_path):
    path = write_metrics(str(tmp_path), "simulate", {"zeta": 1, "alpha": np.float64(2.5), "nan": float("nan"),
                                                     "array": np.arange(3)})
    data = read_json(path)
    assert data["schema"] == METRICS_SCHEMA
    assert data["command"] == "simulate"
    assert data["nan"] is None
    assert data["array"] == [0, 1, 2]
    text = open(path, encoding="utf-8").read()
    assert text.index('"alpha"') < text.index('"zeta"')


def test_read_json_errors(tmp_path):
    with pytest.raises(DependencyError):
        read_json(str(tmp_path / "missing.json"))
    assert read_json(str(tmp_path / "missing.json"), required=False) is None
    bad = tmp_path / "bad.json"
    bad.write_text('{"a": 1,,}', encoding="utf-8")
    with pytest.raises(ParseError) as info:
        read_json(str(bad))
    assert info.value.offset == 8


def test_write_json_is_deterministic(tmp_path):
    write_json(str(tmp_path / "a.json"), {"b": 1, "a": [1, 2]})
    write_json(str(tmp_path / "b.json"), {"a": [1, 2], "b": 1})
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert json.loads((tmp_path / "a.json").read_text()) == {"a": [1, 2], "b": 1}


def test_chunk_ranges_cover_everything():
    assert chunk_ranges(5, 2) == [(0, 2), (2, 4), (4, 5)]
    assert chunk_ranges(0, 4) == []


def test_run_chunked_independent_of_worker_count():
    values = np.arange(1000, dtype=np.float64)

    def square(start, stop):
        return values[start:stop] ** 2

    serial = concat(run_chunked(square, values.size, 1, 64))
    threaded = concat(run_chunked(square, values.size, 4, 64))
    np.testing.assert_array_equal(serial, threaded)
    np.testing.assert_array_equal(serial, values ** 2)
