"""
Patterns package: binary codes, scanlines and reference frames.
"""

from patterns.binary import bit, bits_for, code_layout, gen_binary_codes
from patterns.pattern_set import (
    Pattern,
    PatternSet,
    PatternTag,
    concatenate,
    reference_set,
)
from patterns.scanline import ScanlineSpec, gen_comb, gen_scanlines

__all__ = [
    "Pattern",
    "PatternSet",
    "PatternTag",
    "concatenate",
    "reference_set",
    "bit",
    "bits_for",
    "code_layout",
    "gen_binary_codes",
    "ScanlineSpec",
    "gen_scanlines",
    "gen_comb",
]
