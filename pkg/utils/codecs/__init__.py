"""
File codecs: PFM images, DSLH cubes and CSV tables.
"""

from utils.codecs.cube import decode_cube, encode_cube, read_cube, write_cube
from utils.codecs.pfm import decode_pfm, encode_pfm, read_pfm, write_pfm
from utils.codecs.reader import ByteReader, read_bytes
from utils.codecs.tables import (
    SAMPLE_COLUMNS,
    read_curve,
    read_responses,
    read_samples,
    read_spectra_table,
    read_table,
    write_curve,
    write_responses,
    write_samples,
    write_spectra_table,
    write_table,
)

__all__ = [
    "ByteReader",
    "read_bytes",
    "encode_pfm",
    "decode_pfm",
    "read_pfm",
    "write_pfm",
    "encode_cube",
    "decode_cube",
    "read_cube",
    "write_cube",
    "SAMPLE_COLUMNS",
    "read_table",
    "write_table",
    "read_curve",
    "write_curve",
    "read_responses",
    "write_responses",
    "read_spectra_table",
    "write_spectra_table",
    "read_samples",
    "write_samples",
]
