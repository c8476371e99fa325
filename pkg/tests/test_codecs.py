import struct

import numpy as np
import pandas as pd
import pytest

from spectra.grid import SpectralCurve, WavelengthGrid
from utils.codecs.cube import decode_cube, encode_cube, read_cube, write_cube
from utils.codecs.pfm import decode_pfm, encode_pfm, read_pfm, write_pfm
from utils.codecs.tables import (
    SAMPLE_COLUMNS,
    read_curve,
    read_samples,
    read_table,
    write_curve,
    write_samples,
)
from utils.error_types import DependencyError, DomainError, ParseError


def test_pfm_layout_is_bottom_up():
    image = np.arange(6, dtype=np.float32).reshape(2, 3)
    data = encode_pfm(image)
    assert data.startswith(b"Pf\n3 2\n-1.0\n")
    body = np.frombuffer(data[len(b"Pf\n3 2\n-1.0\n"):], dtype="<f4")
    np.testing.assert_array_equal(body[:3], [3.0, 4.0, 5.0])
    np.testing.assert_array_equal(decode_pfm(data), image)


def test_pfm_color_and_big_endian():
    image = np.random.default_rng(0).uniform(size=(4, 5, 3)).astype(np.float32)
    np.testing.assert_array_equal(decode_pfm(encode_pfm(image)), image)
    big = b"Pf\n1 1\n1.0\n" + struct.pack(">f", 2.5)
    assert decode_pfm(big)[0, 0] == 2.5
    with pytest.raises(DomainError):
        encode_pfm(np.zeros((2, 2, 2)))


def test_pfm_errors_report_offsets():
    with pytest.raises(ParseError) as info:
        decode_pfm(b"P6\n1 1\n-1.0\n")
    assert info.value.offset == 0
    with pytest.raises(ParseError) as info:
        decode_pfm(b"PF\nx y\n-1.0\n")
    assert info.value.offset == 3
    header = b"Pf\n2 2\n-1.0\n"
    with pytest.raises(ParseError) as info:
        decode_pfm(header + b"\x00" * 7)
    assert info.value.offset == len(header)


def test_pfm_file_round_trip(tmp_path):
    path = str(tmp_path / "nested" / "depth.pfm")
    depth = np.full((3, 4), 812.5, dtype=np.float32)
    depth[0, 0] = np.nan
    write_pfm(path, depth)
    loaded = read_pfm(path)
    assert np.isnan(loaded[0, 0])
    assert loaded[2, 3] == 812.5
    with pytest.raises(DependencyError):
        read_pfm(str(tmp_path / "absent.pfm"))


def test_cube_header():
    cube = np.zeros((2, 3, 4))
    data = encode_cube(cube)
    assert data[:4] == b"DSLH"
    assert struct.unpack("<4I", data[4:20]) == (1, 3, 2, 4)
    assert len(data) == 20 + 2 * 3 * 4 * 4
    with pytest.raises(DomainError):
        encode_cube(np.zeros((2, 3)))


def test_cube_errors_report_offsets():
    data = encode_cube(np.ones((2, 2, 3)))
    with pytest.raises(ParseError) as info:
        decode_cube(b"XXXX" + data[4:])
    assert info.value.offset == 0
    with pytest.raises(ParseError) as info:
        decode_cube(data[:4] + struct.pack("<I", 2) + data[8:])
    assert info.value.offset == 4
    with pytest.raises(ParseError) as info:
        decode_cube(data[:-1])
    assert info.value.offset == 20
    with pytest.raises(ParseError) as info:
        decode_cube(data + b"\x00")
    assert info.value.offset == len(data)


def test_cube_file_round_trip(tmp_path):
    cube = np.random.default_rng(3).uniform(size=(3, 2, 5))
    path = str(tmp_path / "cube.dslh")
    write_cube(path, cube)
    np.testing.assert_allclose(read_cube(path), cube, rtol=1e-6)


def test_table_reports_bad_cell_offset(tmp_path):
    path = tmp_path / "curve.csv"
    path.write_text("wavelength_nm,value\n430,0.1\n440,oops\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        read_table(str(path))
    assert info.value.offset == len("wavelength_nm,value\n430,0.1\n")


def test_table_missing_columns(tmp_path):
    path = tmp_path / "curve.csv"
    path.write_text("wavelength,value\n430,0.1\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        read_curve(str(path))
    assert info.value.offset == 0
    with pytest.raises(DependencyError):
        read_table(str(tmp_path / "missing.csv"))


def test_curve_resampled_on_read(tmp_path):
    coarse = WavelengthGrid(430.0, 660.0, 10.0)
    curve = SpectralCurve(coarse, np.linspace(0.0, 1.0, coarse.count))
    path = str(tmp_path / "eta.csv")
    write_curve(path, curve)
    fine = read_curve(path, WavelengthGrid(430.0, 660.0, 5.0))
    assert fine.values[1] == pytest.approx(0.5 / (coarse.count - 1))


def test_samples_keep_integer_orders(tmp_path):
    frame = pd.DataFrame([[1.0, 2.0, 800.0, -1, 600.0, 321.5]], columns=SAMPLE_COLUMNS)
    path = str(tmp_path / "samples.csv")
    write_samples(path, frame)
    loaded = read_samples(path)
    assert list(loaded.columns) == SAMPLE_COLUMNS
    assert loaded["m"].dtype.kind == "i"
    assert loaded["q_col"].iloc[0] == 321.5
