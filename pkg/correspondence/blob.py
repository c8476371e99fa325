"""
DSLC binary blob for correspondence models.

Layout (little-endian):

    magic        4 bytes  b"DSLC"
    version      u32      1
    ny, nx       u32, u32 lattice size
    n_lambda     u32      wavelength knots
    n_depth      u32      sample depths
    n_orders     u32
    x0, dx       f64, f64 lattice columns
    y0, dy       f64, f64 lattice rows
    width        f64      projector width (px)
    orders       f64[n_orders]
    wavelengths  f64[n_lambda]
    depths       f64[n_depth]
    coefficients f64[n_orders·ny·nx·n_lambda·3]   (α, β, γ) fastest
    rms          f64[n_orders·ny·nx·n_lambda]
    samples      f64[n_orders·ny·nx·n_lambda·n_depth]

The LUT is not stored; it is rebuilt on demand after loading.
"""

import logging
import os
import struct

import numpy as np

from correspondence.model import CorrespondenceGrids, CorrespondenceModel
from utils.codecs.reader import ByteReader, read_bytes
from utils.error_types import DomainError
from utils.persistence import ensure_dir

log = logging.getLogger(__name__)

MAGIC = b"DSLC"
VERSION = 1


def encode_model(model: CorrespondenceModel) -> bytes:
    g = model.grids
    parts = [
        MAGIC,
        struct.pack("<6I", VERSION, g.ny, g.nx, len(g.wavelengths), len(g.depths), len(model.orders)),
        struct.pack("<5d", g.x0, g.dx, g.y0, g.dy, float(model.projector_width)),
    ]
    for array in (np.asarray(model.orders, dtype=np.float64), np.asarray(g.wavelengths),
                  np.asarray(g.depths), model.coefficients, model.rms, model.samples):
        parts.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_model(data: bytes, path: str = None) -> CorrespondenceModel:
    """
    Raises:
        ParseError: Bad magic, unknown version, truncation or inconsistent sizes
    """
    reader = ByteReader(data, path)
    if reader.take(4, "magic") != MAGIC:
        reader.fail("not a DSLC blob", 0)
    version, ny, nx, n_lam, n_z, n_orders = reader.unpack("6I", "header")
    if version != VERSION:
        reader.fail(f"unsupported DSLC version {version}", 4)
    x0, dx, y0, dy, width = reader.unpack("5d", "lattice header")

    orders = reader.array("f8", n_orders, "orders")
    wavelengths = reader.array("f8", n_lam, "wavelengths")
    depths = reader.array("f8", n_z, "depths")
    shape = (n_orders, ny, nx, n_lam)
    coefficients = reader.array("f8", int(np.prod(shape)) * 3, "coefficients").reshape(shape + (3,))
    rms = reader.array("f8", int(np.prod(shape)), "rms").reshape(shape)
    samples = reader.array("f8", int(np.prod(shape)) * n_z, "samples").reshape(shape + (n_z,))
    reader.expect_end()

    try:
        grids = CorrespondenceGrids(x0, dx, nx, y0, dy, ny, tuple(wavelengths), tuple(depths))
        return CorrespondenceModel(grids, tuple(int(m) for m in orders), int(width),
                                   coefficients, rms, samples)
    except DomainError as e:
        reader.fail(f"inconsistent model: {e}", 8)


def save_model(model: CorrespondenceModel, path: str) -> None:
    ensure_dir(os.path.dirname(path))
    with open(path, "wb") as file:
        file.write(encode_model(model))
    log.debug("Wrote correspondence model to %s", path)


def load_model(path: str) -> CorrespondenceModel:
    return decode_model(read_bytes(path), path)
