"""
Capture stacks: one camera image per projected pattern.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from patterns.pattern_set import PatternTag
from utils.codecs.pfm import read_pfm, write_pfm
from utils.error_types import ConfigError, DomainError
from utils.persistence import read_json, write_json

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CaptureStack:
    """
    Attributes:
        frames: (K, H, W, 3) linear radiance
        tags: Pattern tag of each frame
        kind: Pattern set kind ("binary", "scanline", "combined", ...)
        params: Pattern set parameters (K_b, K_s, w, s, resolution)
        metadata: sigma, seed, exposure_scale, projector_scale, rig, scene
        flags: Optional (H, W) PixelFlag bits raised while rendering
    """
    frames: np.ndarray = field(repr=False)
    tags: Tuple[PatternTag, ...]
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)
    flags: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 4 or frames.shape[-1] != 3:
            raise DomainError(f"frames must be (K, H, W, 3), got {frames.shape}")
        if frames.shape[0] != len(self.tags):
            raise DomainError(f"{frames.shape[0]} frames for {len(self.tags)} patterns")
        if not np.all(np.isfinite(frames)):
            raise DomainError("capture frames must be finite")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "tags", tuple(self.tags))

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.frames.shape[1], self.frames.shape[2]

    @property
    def exposure_scale(self) -> float:
        return float(self.metadata.get("exposure_scale", 1.0))

    def indices(self, kind: str) -> List[int]:
        return [i for i, t in enumerate(self.tags) if t.kind == kind]

    def subset(self, kind: str) -> "CaptureStack":
        idx = self.indices(kind)
        return replace(self, frames=self.frames[idx], tags=tuple(self.tags[i] for i in idx), kind=kind)

    def reference(self, white: bool) -> Optional[np.ndarray]:
        """The all-white (or all-black) reference frame, if captured."""
        for tag, frame in zip(self.tags, self.frames):
            if tag.kind == "reference" and tag.index == (1 if white else 0):
                return frame
        return None

    def with_frames(self, frames: np.ndarray, **metadata) -> "CaptureStack":
        return replace(self, frames=frames, metadata={**self.metadata, **metadata})


def frame_file(i: int, tag: PatternTag) -> str:
    return f"frame_{i:04d}_{tag.label()}.pfm"


def save_stack(stack: CaptureStack, directory: str, name: str = "stack") -> str:
    """Writes one PFM per frame and a JSON manifest; returns the manifest path."""
    files = []
    for i, (tag, frame) in enumerate(zip(stack.tags, stack.frames)):
        file_name = frame_file(i, tag)
        write_pfm(os.path.join(directory, file_name), frame)
        files.append({"file": file_name, "tag": tag.to_dict()})
    manifest = {
        "kind": stack.kind,
        "params": stack.params,
        "metadata": stack.metadata,
        "resolution": [stack.shape[1], stack.shape[0]],
        "frames": files,
    }
    if stack.flags is not None:
        write_pfm(os.path.join(directory, f"{name}_flags.pfm"), stack.flags.astype(np.float32))
        manifest["flags"] = f"{name}_flags.pfm"
    path = os.path.join(directory, f"{name}.json")
    write_json(path, manifest)
    log.info("Wrote %d frames to %s", len(stack), directory)
    return path


def load_stack(path: str) -> CaptureStack:
    manifest = read_json(path)
    base = os.path.dirname(path)
    try:
        entries = manifest["frames"]
        frames = np.stack([read_pfm(os.path.join(base, e["file"])) for e in entries]).astype(np.float64)
        tags = tuple(PatternTag.from_dict(e["tag"]) for e in entries)
    except KeyError as e:
        raise ConfigError(f"stack manifest '{path}' lacks {e}")
    flags = None
    if manifest.get("flags"):
        flags = read_pfm(os.path.join(base, manifest["flags"])).astype(np.uint8)
    return CaptureStack(frames, tags, manifest.get("kind", "combined"), manifest.get("params", {}),
                        manifest.get("metadata", {}), flags)
