"""
DSLH hyperspectral cubes.

    magic    4 bytes  b"DSLH"
    version  u32      1
    W, H, N  u32 × 3
    data     f32[H·W·N] little-endian, row-major, wavelength fastest
"""

import os
import struct

import numpy as np

from utils.codecs.reader import ByteReader, read_bytes
from utils.error_types import DomainError
from utils.persistence import ensure_dir

MAGIC = b"DSLH"
VERSION = 1


def encode_cube(cube: np.ndarray) -> bytes:
    cube = np.asarray(cube)
    if cube.ndim != 3:
        raise DomainError(f"cube must be (H, W, N), got shape {cube.shape}")
    height, width, n = cube.shape
    header = MAGIC + struct.pack("<4I", VERSION, width, height, n)
    return header + np.ascontiguousarray(cube, dtype="<f4").tobytes()


def decode_cube(data: bytes, path: str = None) -> np.ndarray:
    reader = ByteReader(data, path)
    if reader.take(4, "magic") != MAGIC:
        reader.fail("not a DSLH cube", 0)
    version, width, height, n = reader.unpack("4I", "header")
    if version != VERSION:
        reader.fail(f"unsupported DSLH version {version}", 4)
    values = reader.array("f4", width * height * n, "cube data")
    reader.expect_end()
    return values.reshape(height, width, n).astype(np.float32)


def write_cube(path: str, cube: np.ndarray) -> None:
    ensure_dir(os.path.dirname(path))
    with open(path, "wb") as file:
        file.write(encode_cube(cube))


def read_cube(path: str) -> np.ndarray:
    return decode_cube(read_bytes(path), path)
