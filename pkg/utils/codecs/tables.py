"""
CSV tables via pandas.

Functions:
    - read_table() / write_table(): Generic UTF-8 CSV with '.' decimals
    - read_curve() / write_curve(): `wavelength_nm,value`
    - read_responses() / write_responses(): `wavelength_nm,r,g,b` for one device
    - read_spectra_table(): `wavelength_nm` plus one column per named spectrum
    - read_samples() / write_samples(): Correspondence samples
"""

import io
import logging
import os
import re
from typing import Dict, Sequence, Tuple

import numpy as np
import pandas as pd

from spectra.grid import SpectralCurve, WavelengthGrid, resample
from utils.codecs.reader import read_bytes
from utils.error_types import ParseError
from utils.persistence import ensure_dir

log = logging.getLogger(__name__)

SAMPLE_COLUMNS = ["px", "py", "z_mm", "m", "lambda_nm", "q_col"]


def _line_offset(raw: bytes, line_no: int) -> int:
    """Byte offset of 1-based line `line_no`."""
    offset = 0
    for _ in range(max(0, line_no - 1)):
        nxt = raw.find(b"\n", offset)
        if nxt < 0:
            return len(raw)
        offset = nxt + 1
    return offset


def read_table(path: str, required: Sequence[str] = ()) -> pd.DataFrame:
    """
    Reads a numeric CSV.

    Raises:
        DependencyError: File missing
        ParseError: Malformed CSV, missing columns or non-numeric cells
    """
    raw = read_bytes(path)
    try:
        frame = pd.read_csv(io.BytesIO(raw), encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        match = re.search(r"line (\d+)", str(e))
        raise ParseError(f"malformed CSV: {e}", path, _line_offset(raw, int(match.group(1))) if match else 0)

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise ParseError(f"missing columns {missing}", path, 0)

    for column in frame.columns:
        numeric = pd.to_numeric(frame[column], errors="coerce")
        bad = numeric.isna() & frame[column].notna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            # header is line 1
            raise ParseError(f"non-numeric value in column '{column}'", path, _line_offset(raw, row + 2))
        frame[column] = numeric
    return frame


def write_table(path: str, frame: pd.DataFrame) -> None:
    ensure_dir(os.path.dirname(path))
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n", float_format="%.10g")


def read_curve(path: str, grid: WavelengthGrid = None, non_negative: bool = True) -> SpectralCurve:
    """Reads `wavelength_nm,value`; resampled onto `grid` when given."""
    frame = read_table(path, ["wavelength_nm", "value"])
    source = WavelengthGrid.from_wavelengths(frame["wavelength_nm"])
    curve = SpectralCurve(source, frame["value"].to_numpy(), non_negative)
    return resample(curve, grid) if grid is not None else curve


def write_curve(path: str, curve: SpectralCurve) -> None:
    write_table(path, pd.DataFrame({"wavelength_nm": curve.wavelengths, "value": curve.values}))


def read_responses(path: str, grid: WavelengthGrid = None) -> Tuple[SpectralCurve, ...]:
    """Reads `wavelength_nm,r,g,b` as three curves."""
    frame = read_table(path, ["wavelength_nm", "r", "g", "b"])
    source = WavelengthGrid.from_wavelengths(frame["wavelength_nm"])
    curves = tuple(SpectralCurve(source, frame[c].to_numpy(), True) for c in ("r", "g", "b"))
    if grid is not None:
        curves = tuple(resample(c, grid) for c in curves)
    return curves


def write_responses(path: str, curves: Sequence[SpectralCurve]) -> None:
    frame = pd.DataFrame({"wavelength_nm": curves[0].wavelengths})
    for name, curve in zip(("r", "g", "b"), curves):
        frame[name] = curve.values
    write_table(path, frame)


def read_spectra_table(path: str) -> Tuple[WavelengthGrid, Dict[str, np.ndarray]]:
    """`wavelength_nm` plus one column per spectrum; returns the grid and named columns."""
    frame = read_table(path, ["wavelength_nm"])
    grid = WavelengthGrid.from_wavelengths(frame["wavelength_nm"])
    return grid, {c: frame[c].to_numpy(float) for c in frame.columns if c != "wavelength_nm"}


def write_spectra_table(path: str, wavelengths: np.ndarray, spectra: Dict[str, np.ndarray]) -> None:
    frame = pd.DataFrame({"wavelength_nm": wavelengths})
    for name, values in spectra.items():
        frame[name] = np.asarray(values, dtype=np.float64)
    write_table(path, frame)


def read_samples(path: str) -> pd.DataFrame:
    frame = read_table(path, SAMPLE_COLUMNS)
    frame["m"] = frame["m"].astype(int)
    return frame[SAMPLE_COLUMNS]


def write_samples(path: str, frame: pd.DataFrame) -> None:
    write_table(path, frame[SAMPLE_COLUMNS])
