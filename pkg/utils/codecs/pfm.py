"""
Portable Float Map images.

Header "PF" (3 channels) or "Pf" (1 channel), then "width height", then a
scale whose sign gives the byte order (negative = little-endian). Rows are
stored bottom-up.
"""

import logging
import os

import numpy as np

from utils.codecs.reader import ByteReader, read_bytes
from utils.error_types import DomainError
from utils.persistence import ensure_dir

log = logging.getLogger(__name__)


def encode_pfm(image: np.ndarray) -> bytes:
    img = np.asarray(image, dtype=np.float32)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    if img.ndim == 2:
        tag = b"Pf"
    elif img.ndim == 3 and img.shape[2] == 3:
        tag = b"PF"
    else:
        raise DomainError(f"PFM stores 1 or 3 channels, got shape {img.shape}")
    height, width = img.shape[:2]
    header = tag + b"\n" + f"{width} {height}\n".encode("ascii") + b"-1.0\n"
    body = np.ascontiguousarray(np.flipud(img), dtype="<f4").tobytes()
    return header + body


def decode_pfm(data: bytes, path: str = None) -> np.ndarray:
    """
    Returns a (H, W) or (H, W, 3) float32 array, top row first.

    Raises:
        ParseError: Bad header or truncated pixel data
    """
    reader = ByteReader(data, path)
    tag = reader.line("identifier").strip()
    if tag == "PF":
        channels = 3
    elif tag == "Pf":
        channels = 1
    else:
        reader.fail(f"unrecognized PFM identifier {tag!r}", 0)

    dims_at = reader.offset
    dims = reader.line("dimensions").split()
    try:
        width, height = int(dims[0]), int(dims[1])
    except (IndexError, ValueError):
        reader.fail("malformed PFM dimensions", dims_at)
    if width <= 0 or height <= 0:
        reader.fail("PFM dimensions must be positive", dims_at)

    scale_at = reader.offset
    try:
        scale = float(reader.line("scale"))
    except ValueError:
        reader.fail("malformed PFM scale", scale_at)
    dtype = "<f4" if scale < 0 else ">f4"

    raw = reader.take(width * height * channels * 4, "pixel data")
    img = np.frombuffer(raw, dtype=dtype).astype(np.float32)
    img = img.reshape((height, width, channels) if channels == 3 else (height, width))
    return np.flipud(img).copy()


def write_pfm(path: str, image: np.ndarray) -> None:
    ensure_dir(os.path.dirname(path))
    with open(path, "wb") as file:
        file.write(encode_pfm(image))


def read_pfm(path: str) -> np.ndarray:
    return decode_pfm(read_bytes(path), path)
