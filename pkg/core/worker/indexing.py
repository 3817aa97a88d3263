"""
Position grids for mixed text/image token layouts.

Three schemes are supported: sequential, 3D (temporal/height/width counters
per image block) and physics-informed (hour of year, shifted latitude and
shifted longitude of each patch, mapped to negative values).
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from .exceptions import ConfigError, DataError
from .geo import PhysicalContext, temporal_position

__all__ = ["TextSegment", "ImageBlock", "TokenLayout", "PositionGrid", "VideoParams", "IndexingScheme",
           "DisjointReport", "sequential_ids", "three_d_ids", "physics_ids", "negate_map",
           "validate_disjoint", "build_position_grid"]


@dataclass(frozen=True)
class TextSegment:
    length: int

    def __post_init__(self):
        if self.length <= 0:
            raise DataError(f"text segment length must be positive, got {self.length}")


@dataclass(frozen=True)
class ImageBlock:
    context: Optional[PhysicalContext]
    n_row: int
    n_col: int

    def __post_init__(self):
        if self.n_row <= 0 or self.n_col <= 0:
            raise DataError(f"image block grid must be positive, got {self.n_row}x{self.n_col}")
        if self.context is not None and (self.context.n_row, self.context.n_col) != (self.n_row, self.n_col):
            raise DataError(f"image block grid {self.n_row}x{self.n_col} does not match its context grid "
                            f"{self.context.n_row}x{self.context.n_col}")

    @property
    def length(self) -> int:
        return self.n_row * self.n_col


Segment = Union[TextSegment, ImageBlock]


@dataclass(frozen=True)
class TokenLayout:
    segments: Tuple[Segment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def seq_len(self) -> int:
        return sum(segment.length for segment in self.segments)

    @property
    def images(self) -> Tuple[ImageBlock, ...]:
        return tuple(s for s in self.segments if isinstance(s, ImageBlock))

    def visionMask(self) -> np.ndarray:
        mask = np.zeros(self.seq_len, dtype=bool)
        offset = 0
        for segment in self.segments:
            if isinstance(segment, ImageBlock):
                mask[offset:offset + segment.length] = True
            offset += segment.length
        return mask

    def extended(self, textTokens: int) -> "TokenLayout":
        """Layout with `textTokens` more text tokens appended (merged into a trailing text segment)."""
        if textTokens <= 0:
            return self
        segments = list(self.segments)
        if segments and isinstance(segments[-1], TextSegment):
            segments[-1] = TextSegment(segments[-1].length + textTokens)
        else:
            segments.append(TextSegment(textTokens))
        return TokenLayout(tuple(segments))


@dataclass
class PositionGrid:
    axes: np.ndarray = field(default_factory=lambda: np.zeros((3, 0), dtype=np.float64))

    def __post_init__(self):
        self.axes = np.asarray(self.axes, dtype=np.float64)
        if self.axes.ndim != 2 or self.axes.shape[0] != 3:
            raise DataError(f"position grid must have shape (3, L), got {self.axes.shape}")

    @property
    def seq_len(self) -> int:
        return self.axes.shape[1]


@dataclass(frozen=True)
class VideoParams:
    tokens_per_second: float = 1.0
    temporal_patch_size: int = 2
    fps: float = 2.0

    def __post_init__(self):
        if not (self.tokens_per_second > 0 and self.temporal_patch_size > 0 and self.fps > 0):
            raise ConfigError("video parameters must be strictly positive")

    @property
    def temporal_stride(self) -> float:
        return self.tokens_per_second * self.temporal_patch_size / self.fps


class IndexingScheme(str, Enum):
    SEQUENTIAL = "sequential"
    THREE_D = "three_d"
    PHYSICS = "physics"

    @classmethod
    def parse(cls, name: Union[str, "IndexingScheme"]) -> "IndexingScheme":
        try:
            return cls(name)
        except ValueError:
            raise ConfigError(f"unknown indexing scheme '{name}' "
                              f"(expected one of {', '.join(s.value for s in cls)})")


def sequential_ids(seq_len: int) -> PositionGrid:
    if seq_len < 0:
        raise DataError(f"seq_len must be non-negative, got {seq_len}")
    ids = np.arange(seq_len, dtype=np.float64)
    return PositionGrid(np.stack([ids, ids, ids]))


def three_d_ids(layout: TokenLayout, vp: VideoParams = VideoParams()) -> PositionGrid:
    axes = np.zeros((3, layout.seq_len), dtype=np.float64)
    counter = 0.0
    offset = 0
    block = 0

    for segment in layout.segments:
        if isinstance(segment, TextSegment):
            axes[:, offset:offset + segment.length] = counter + np.arange(segment.length)
            counter += segment.length
        else:
            base = counter
            rows, cols = np.divmod(np.arange(segment.length), segment.n_col)
            axes[0, offset:offset + segment.length] = base + block * vp.temporal_stride
            axes[1, offset:offset + segment.length] = base + rows
            axes[2, offset:offset + segment.length] = base + cols
            counter = axes[:, :offset + segment.length].max() + 1.0
            block += 1
        offset += segment.length

    return PositionGrid(axes)


def negate_map(v):
    """v -> -(v + 1): strictly negative and order-reversing on v >= 0."""
    values = np.asarray(v, dtype=np.float64)
    if np.any(values < 0) or np.any(np.isnan(values)):
        raise DataError("negate_map is only defined for non-negative values")
    mapped = -(values + 1.0)
    return float(mapped) if mapped.ndim == 0 else mapped


def physics_ids(layout: TokenLayout, negate: bool = True) -> PositionGrid:
    axes = np.zeros((3, layout.seq_len), dtype=np.float64)
    counter = 0
    offset = 0

    for segment in layout.segments:
        if isinstance(segment, TextSegment):
            axes[:, offset:offset + segment.length] = counter + np.arange(segment.length)
            counter += segment.length
        else:
            if segment.context is None:
                raise ConfigError(f"image block at token {offset} has no physical context")
            t = temporal_position(segment.context.timestamp)
            latIds, lngIds = segment.context.idArrays()
            values = np.stack([np.full(segment.length, t), latIds, lngIds])
            axes[:, offset:offset + segment.length] = negate_map(values) if negate else values
        offset += segment.length

    return PositionGrid(axes)


def build_position_grid(layout: TokenLayout, scheme: Union[str, IndexingScheme],
                        vp: VideoParams = VideoParams(), negate: bool = True) -> PositionGrid:
    scheme = IndexingScheme.parse(scheme)
    if scheme is IndexingScheme.SEQUENTIAL:
        return sequential_ids(layout.seq_len)
    if scheme is IndexingScheme.THREE_D:
        return three_d_ids(layout, vp)
    return physics_ids(layout, negate=negate)


@dataclass(frozen=True)
class DisjointReport:
    collisions: int
    ok: bool


def validate_disjoint(grid: PositionGrid, layout: TokenLayout) -> DisjointReport:
    """Count (axis, value) pairs used by both a text token and a vision token."""
    if grid.seq_len != layout.seq_len:
        raise DataError(f"grid length {grid.seq_len} does not match layout length {layout.seq_len}")

    vision = layout.visionMask()
    collisions = 0
    for axis in grid.axes:
        collisions += len(np.intersect1d(axis[~vision], axis[vision]))

    return DisjointReport(collisions, collisions == 0)
