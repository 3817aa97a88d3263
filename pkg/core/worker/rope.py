"""
Rotary position embeddings over the three position axes.

Rotary pair j of a head vector is (v[2j], v[2j+1]). The pairs are split into
three consecutive sections rotated by the temporal, height and width
position respectively.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import torch

from .exceptions import ConfigError
from .variables import ROPE_BASE

__all__ = ["RopeConfig", "inverse_frequencies", "rope_rotate_1d", "mrope_rotate", "rotation_angles",
           "apply_rotation"]


@dataclass(frozen=True)
class RopeConfig:
    head_dim: int
    base: float = ROPE_BASE
    sections: Optional[Tuple[int, int, int]] = None
    per_section_freq_restart: bool = False

    def __post_init__(self):
        if self.head_dim <= 0 or self.head_dim % 2:
            raise ConfigError(f"rotary head_dim must be a positive even number, got {self.head_dim}")
        if self.sections is None:
            spatial = self.head_dim // 8
            object.__setattr__(self, "sections", (self.head_dim // 2 - 2 * spatial, spatial, spatial))
        else:
            object.__setattr__(self, "sections", tuple(int(s) for s in self.sections))
        if len(self.sections) != 3 or min(self.sections) < 0:
            raise ConfigError(f"rotary sections must be three non-negative counts, got {self.sections}")
        if sum(self.sections) != self.head_dim // 2:
            raise ConfigError(f"rotary sections {self.sections} must sum to head_dim/2 = {self.head_dim // 2}")

    @property
    def pairs(self) -> int:
        return self.head_dim // 2


def inverse_frequencies(cfg: RopeConfig, dtype=torch.float64) -> torch.Tensor:
    if not cfg.per_section_freq_restart:
        j = torch.arange(cfg.pairs, dtype=dtype)
        return cfg.base ** (-2.0 * j / cfg.head_dim)

    parts = []
    for count in cfg.sections:
        j = torch.arange(count, dtype=dtype)
        parts.append(cfg.base ** (-j / max(count, 1)))
    return torch.cat(parts)


def _pairAxes(cfg: RopeConfig) -> torch.Tensor:
    return torch.repeat_interleave(torch.arange(3), torch.tensor(cfg.sections))


def _rotate(v: torch.Tensor, angles: torch.Tensor) -> torch.Tensor:
    even, odd = v[..., 0::2], v[..., 1::2]
    cos, sin = torch.cos(angles), torch.sin(angles)
    rotated = torch.stack([even * cos - odd * sin, even * sin + odd * cos], dim=-1)
    return rotated.flatten(-2)


def rope_rotate_1d(v: torch.Tensor, pos: Union[float, torch.Tensor], base: float = ROPE_BASE) -> torch.Tensor:
    """Rotate pair j of v by pos * base^(-2j/head_dim); pos broadcasts over the leading dims of v."""
    v = torch.as_tensor(v)
    headDim = v.shape[-1]
    if headDim % 2:
        raise ConfigError(f"head_dim must be even, got {headDim}")

    dtype = v.dtype if v.is_floating_point() else torch.float64
    j = torch.arange(headDim // 2, dtype=dtype)
    pos = torch.as_tensor(pos, dtype=dtype)
    angles = pos.unsqueeze(-1) * base ** (-2.0 * j / headDim)
    return _rotate(v.to(dtype), angles)


def rotation_angles(positions: torch.Tensor, cfg: RopeConfig) -> torch.Tensor:
    """positions (..., 3) -> per-pair rotation angles (..., head_dim/2)."""
    positions = torch.as_tensor(positions)
    if positions.shape[-1] != 3:
        raise ConfigError(f"expected 3 position axes, got {positions.shape[-1]}")
    dtype = positions.dtype if positions.is_floating_point() else torch.float64
    perPair = positions.to(dtype)[..., _pairAxes(cfg)]
    return perPair * inverse_frequencies(cfg, dtype)


def apply_rotation(v: torch.Tensor, angles: torch.Tensor) -> torch.Tensor:
    return _rotate(v, angles.to(v.dtype))


def mrope_rotate(v: torch.Tensor, pos3: Union[Sequence[float], torch.Tensor], cfg: RopeConfig) -> torch.Tensor:
    v = torch.as_tensor(v)
    if v.shape[-1] != cfg.head_dim:
        raise ConfigError(f"vector dim {v.shape[-1]} does not match rotary head_dim {cfg.head_dim}")
    dtype = v.dtype if v.is_floating_point() else torch.float64
    return apply_rotation(v.to(dtype), rotation_angles(torch.as_tensor(pos3, dtype=dtype), cfg))
