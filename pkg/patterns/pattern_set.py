"""
Pattern containers.

Patterns are stored as samplers rather than dense images so that large
scanline sets cost nothing until an image is exported.

Classes:
    - PatternTag: What a pattern encodes (bit/axis, scanline index, reference)
    - Pattern: One projector image
    - PatternSet: Ordered patterns plus generation parameters
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from utils.error_types import DomainError

Sampler = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PatternTag:
    """
    Attributes:
        kind: "binary", "scanline" or "reference"
        index: Bit index, scanline index, or 0/1 for black/white references
        axis: "col" or "row" for binary patterns
        inverse: Complementary binary pattern
    """
    kind: str
    index: int = 0
    axis: Optional[str] = None
    inverse: bool = False

    def label(self) -> str:
        if self.kind == "binary":
            return f"binary_{self.axis}{self.index:02d}{'_inv' if self.inverse else ''}"
        if self.kind == "reference":
            return "reference_white" if self.index == 1 else "reference_black"
        return f"{self.kind}_{self.index:04d}"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "index": self.index, "axis": self.axis, "inverse": self.inverse}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PatternTag":
        return cls(data["kind"], int(data.get("index", 0)), data.get("axis"), bool(data.get("inverse", False)))


@dataclass(frozen=True)
class Pattern:
    """
    A projector pattern P(q, c) with values in [0, 1].

    `sampler(rows, cols)` returns channel-uniform values with the shape of
    its inputs, or per-channel values with a trailing axis of 3.
    """
    width: int
    height: int
    tag: PatternTag
    sampler: Sampler = field(repr=False, compare=False)

    def sample(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Values at integer locations, shape (..., 3); zero outside the projector."""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        inside = (cols >= 0) & (cols < self.width) & (rows >= 0) & (rows < self.height)
        r = np.where(inside, rows, 0)
        c = np.where(inside, cols, 0)
        values = np.asarray(self.sampler(r, c), dtype=np.float64)
        if values.shape == inside.shape:
            values = np.repeat(values[..., None], 3, axis=-1)
        return np.where(inside[..., None], values, 0.0)

    def image(self) -> np.ndarray:
        """Dense (height, width, 3) float32 image."""
        rows, cols = np.mgrid[0:self.height, 0:self.width]
        return self.sample(rows, cols).astype(np.float32)

    def scaled(self, factor: float) -> "Pattern":
        if not 0.0 <= factor <= 1.0:
            raise DomainError("pattern scale must lie in [0, 1]")
        base = self.sampler
        return Pattern(self.width, self.height, self.tag, lambda r, c: factor * np.asarray(base(r, c)))

    @classmethod
    def from_array(cls, image: np.ndarray, tag: PatternTag) -> "Pattern":
        data = np.asarray(image, dtype=np.float64)
        if data.ndim == 2:
            data = np.repeat(data[..., None], 3, axis=-1)
        if np.any(data < 0) or np.any(data > 1):
            raise DomainError("pattern values must lie in [0, 1]")
        height, width = data.shape[:2]
        return cls(width, height, tag, lambda r, c: data[r, c])

    @classmethod
    def constant(cls, width: int, height: int, value: float, tag: PatternTag) -> "Pattern":
        return cls(width, height, tag, lambda r, c: np.full(np.shape(r), float(value)))


@dataclass(frozen=True)
class PatternSet:
    """
    Attributes:
        kind: "binary", "scanline", "reference" or "combined"
        patterns: Ordered patterns
        params: Generation parameters (K_b, K_s, w, s, resolution, ...)
    """
    kind: str
    patterns: Tuple[Pattern, ...]
    params: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self) -> Iterator[Pattern]:
        return iter(self.patterns)

    def __getitem__(self, i: int) -> Pattern:
        return self.patterns[i]

    @property
    def tags(self) -> List[PatternTag]:
        return [p.tag for p in self.patterns]

    def indices(self, kind: str) -> List[int]:
        return [i for i, p in enumerate(self.patterns) if p.tag.kind == kind]

    def subset(self, kind: str) -> "PatternSet":
        chosen = tuple(p for p in self.patterns if p.tag.kind == kind)
        return PatternSet(kind, chosen, dict(self.params))

    def manifest(self, file_names: Optional[Sequence[str]] = None) -> Dict[str, Any]:
        entries = []
        for i, pattern in enumerate(self.patterns):
            entry = {"tag": pattern.tag.to_dict(), "label": pattern.tag.label()}
            if file_names is not None:
                entry["file"] = file_names[i]
            entries.append(entry)
        return {"kind": self.kind, "params": dict(self.params), "patterns": entries}


def concatenate(kind: str, *sets: PatternSet) -> PatternSet:
    params: Dict[str, Any] = {}
    patterns: List[Pattern] = []
    for s in sets:
        params.update(s.params)
        patterns.extend(s.patterns)
    return PatternSet(kind, tuple(patterns), params)


def reference_set(width: int, height: int) -> PatternSet:
    """All-white then all-black frame."""
    white = Pattern.constant(width, height, 1.0, PatternTag("reference", 1))
    black = Pattern.constant(width, height, 0.0, PatternTag("reference", 0))
    return PatternSet("reference", (white, black), {"resolution": [width, height]})
