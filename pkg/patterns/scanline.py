"""
Scanline patterns: a vertical white line of width w swept in steps of s.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from patterns.pattern_set import Pattern, PatternSet, PatternTag
from utils.error_types import DomainError


@dataclass(frozen=True)
class ScanlineSpec:
    """
    Attributes:
        width: Projector width in pixels
        line_width: Line width w
        shift: Step s between consecutive lines
    """
    width: int
    line_width: int = 5
    shift: int = 2

    def __post_init__(self):
        if not 1 <= self.shift <= self.line_width <= self.width:
            raise DomainError("scanlines need 1 <= s <= w <= width")

    @property
    def count(self) -> int:
        return (self.width - self.line_width) // self.shift + 1

    def span(self, i: int) -> Tuple[int, int]:
        """Half-open column range lit by pattern i; the last line runs to the edge."""
        start = self.shift * i
        stop = self.width if i == self.count - 1 else start + self.line_width
        return start, stop

    def center(self, i):
        return self.shift * np.asarray(i) + (self.line_width - 1) / 2.0

    def lit(self, i: int, cols: np.ndarray) -> np.ndarray:
        start, stop = self.span(i)
        cols = np.asarray(cols)
        return (cols >= start) & (cols < stop)

    def to_dict(self) -> dict:
        return {"width": self.width, "w": self.line_width, "s": self.shift, "K_s": self.count}

    @classmethod
    def from_dict(cls, data: dict) -> "ScanlineSpec":
        return cls(int(data["width"]), int(data.get("w", 5)), int(data.get("s", 2)))


def gen_scanlines(resolution: Tuple[int, int], w: int = 5, s: int = 2) -> PatternSet:
    """
    Scanline patterns covering every projector column.

    Args:
        resolution: Projector (width, height)
        w: Line width in pixels
        s: Shift between lines in pixels
    """
    width, height = resolution
    spec = ScanlineSpec(width, w, s)
    patterns = []
    for i in range(spec.count):
        start, stop = spec.span(i)

        def sampler(rows, cols, start=start, stop=stop):
            cols = np.asarray(cols)
            return ((cols >= start) & (cols < stop)).astype(np.float64)

        patterns.append(Pattern(width, height, PatternTag("scanline", i), sampler))
    params = {"resolution": [width, height], "w": w, "s": s, "K_s": spec.count}
    return PatternSet("scanline", tuple(patterns), params)


def gen_comb(resolution: Tuple[int, int], period: int = 64, line_width: int = 3,
             offsets: Tuple[int, ...] = (0,)) -> PatternSet:
    """
    Sparse line combs for calibration captures: every `period` columns a
    line of `line_width` pixels, one pattern per offset.
    """
    width, height = resolution
    if not 1 <= line_width < period:
        raise DomainError("comb lines need 1 <= line_width < period")
    patterns = []
    for i, offset in enumerate(offsets):
        def sampler(rows, cols, offset=offset):
            return (((np.asarray(cols) - offset) % period) < line_width).astype(np.float64)

        patterns.append(Pattern(width, height, PatternTag("comb", i), sampler))
    params = {"resolution": [width, height], "period": period, "line_width": line_width,
              "offsets": list(offsets)}
    return PatternSet("comb", tuple(patterns), params)
