"""
Offset-tracking reader for the binary formats.

Every short read raises ParseError naming the byte offset where the data
ran out, so truncated files are reported precisely.
"""

import struct
from typing import Optional, Tuple

import numpy as np

from utils.error_types import DependencyError, ParseError


class ByteReader:
    """Sequential little-endian reader over an in-memory buffer."""

    def __init__(self, data: bytes, path: Optional[str] = None):
        self.data = data
        self.path = path
        self.offset = 0

    def fail(self, message: str, offset: Optional[int] = None):
        raise ParseError(message, self.path, self.offset if offset is None else offset)

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if size < 0 or end > len(self.data):
            self.fail(f"truncated {what}: need {size} bytes, {len(self.data) - self.offset} left")
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str, what: str) -> Tuple:
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt), what))

    def array(self, dtype: str, count: int, what: str) -> np.ndarray:
        dt = np.dtype(dtype).newbyteorder("<")
        raw = self.take(int(count) * dt.itemsize, what)
        return np.frombuffer(raw, dtype=dt).astype(dt.newbyteorder("="))

    def line(self, what: str, limit: int = 256) -> str:
        end = self.data.find(b"\n", self.offset, self.offset + limit)
        if end < 0:
            self.fail(f"missing end of line in {what}")
        text = self.data[self.offset:end].decode("ascii", errors="replace")
        self.offset = end + 1
        return text

    def expect_end(self):
        if self.offset != len(self.data):
            self.fail(f"{len(self.data) - self.offset} trailing bytes")


def read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as file:
            return file.read()
    except FileNotFoundError:
        raise DependencyError(f"missing artifact '{path}'")
