"""
Plain binary-code patterns (not Gray codes).

Column bits come first, then row bits; bit 0 is the least significant.
"""

import math
from typing import Sequence, Tuple

import numpy as np

from patterns.pattern_set import Pattern, PatternSet, PatternTag
from utils.error_types import DomainError


def bits_for(size: int) -> int:
    """Bits needed to address `size` positions."""
    if size <= 0:
        raise DomainError("resolution must be positive")
    return max(1, math.ceil(math.log2(size)))


def code_layout(resolution: Tuple[int, int]) -> Tuple[int, int]:
    width, height = resolution
    return bits_for(width), bits_for(height)


def bit(q: Sequence[int], i: int, resolution: Tuple[int, int]) -> int:
    """
    The i-th bit of a projector pixel's binary code.

    Args:
        q: Projector pixel (column, row)
        i: Bit index; indices below the column bit count address the column
        resolution: Projector (width, height)
    """
    col_bits, row_bits = code_layout(resolution)
    if not 0 <= i < col_bits + row_bits:
        raise DomainError(f"bit index {i} outside 0..{col_bits + row_bits - 1}")
    col, row = int(q[0]), int(q[1])
    if i < col_bits:
        return (col >> i) & 1
    return (row >> (i - col_bits)) & 1


def _bit_sampler(shift: int, axis: str, inverse: bool):
    def sampler(rows, cols):
        coord = cols if axis == "col" else rows
        value = (np.asarray(coord, dtype=np.int64) >> shift) & 1
        return (1 - value if inverse else value).astype(np.float64)
    return sampler


def gen_binary_codes(resolution: Tuple[int, int], complementary: bool = False) -> PatternSet:
    """
    Binary-code patterns for a projector resolution.

    Args:
        resolution: Projector (width, height)
        complementary: Follow each pattern with its inverse

    Returns:
        PatternSet with K_b = col bits + row bits patterns (doubled when complementary)
    """
    width, height = resolution
    col_bits, row_bits = code_layout(resolution)
    patterns = []
    for i in range(col_bits + row_bits):
        axis, shift = ("col", i) if i < col_bits else ("row", i - col_bits)
        variants = (False, True) if complementary else (False,)
        for inverse in variants:
            tag = PatternTag("binary", i, axis, inverse)
            patterns.append(Pattern(width, height, tag, _bit_sampler(shift, axis, inverse)))
    params = {
        "resolution": [width, height],
        "col_bits": col_bits,
        "row_bits": row_bits,
        "complementary": complementary,
        "K_b": len(patterns),
    }
    return PatternSet("binary", tuple(patterns), params)
