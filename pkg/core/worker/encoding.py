"""
Additive sinusoidal positional embeddings.

Text rows use the standard transformer sinusoid. Vision rows use the
variant-frequency sinusoid: the first half of the model dimensions encodes
day-of-year and hour-of-day, the second half shifted latitude and longitude,
each in groups of four dims whose base wavelength is the physical period of
the variable (366 days, 24 hours, 180 and 360 degrees).
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Union

import numpy as np
import torch

from .exceptions import ConfigError, DataError
from .geo import temporal_position
from .indexing import ImageBlock, TokenLayout
from .variables import HOURS_PER_DAY, SINUSOID_BASE

__all__ = ["Wavelengths", "PEMatrix", "PEMode", "VisionPosition", "standard_pe", "standard_pe_rows",
           "variant_frequency_pe", "variant_frequency_rows", "wavelength", "build_pe_matrix",
           "add_to_embeddings"]


@dataclass(frozen=True)
class Wavelengths:
    p_day: float = 366.0
    p_hour: float = 24.0
    p_lat: float = 180.0
    p_lng: float = 360.0

    def __post_init__(self):
        if min(self.p_day, self.p_hour, self.p_lat, self.p_lng) <= 0:
            raise ConfigError("wavelengths must be strictly positive")


class VisionPosition(NamedTuple):
    t_day: float
    t_hour: float
    lat_id: float
    lng_id: float


class PEMode(str, Enum):
    NONE = "none"
    STANDARD = "standard"
    VARIANT = "variant"

    @classmethod
    def parse(cls, name: Union[str, "PEMode"]) -> "PEMode":
        try:
            return cls(name)
        except ValueError:
            raise ConfigError(f"unknown positional embedding mode '{name}'")


@dataclass
class PEMatrix:
    values: Union[np.ndarray, torch.Tensor]
    d_model: int
    vision_mask: np.ndarray

    @property
    def seq_len(self) -> int:
        return self.values.shape[0]


def _checkEven(d_model: int):
    if d_model <= 0 or d_model % 2:
        raise ConfigError(f"d_model must be a positive even number, got {d_model}")


def _checkEighths(d_model: int):
    if d_model <= 0 or d_model % 8:
        raise ConfigError(f"d_model must be divisible by 8, got {d_model}")


def standard_pe_rows(positions, d_model: int) -> np.ndarray:
    _checkEven(d_model)
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 1)
    exponents = np.arange(0, d_model, 2, dtype=np.float64) / d_model
    angles = positions / np.power(SINUSOID_BASE, exponents)

    rows = np.empty((positions.shape[0], d_model), dtype=np.float64)
    rows[:, 0::2] = np.sin(angles)
    rows[:, 1::2] = np.cos(angles)
    return rows


def standard_pe(pos: float, d_model: int) -> np.ndarray:
    return standard_pe_rows([pos], d_model)[0]


def variant_frequency_rows(t_day, t_hour, lat_id, lng_id, d_model: int, w: Wavelengths = Wavelengths()) -> np.ndarray:
    _checkEighths(d_model)
    t_day, t_hour, lat_id, lng_id = (np.asarray(v, dtype=np.float64).reshape(-1, 1)
                                     for v in (t_day, t_hour, lat_id, lng_id))
    if np.any(lat_id < 0) or np.any(lat_id > 180) or np.any(lng_id < 0) or np.any(lng_id >= 360):
        raise DataError("lat_id must lie in [0, 180] and lng_id in [0, 360)")

    groups = d_model // 8
    scale = 1.0 / np.power(SINUSOID_BASE, 4.0 * np.arange(groups) / d_model)

    rows = np.empty((t_day.shape[0], d_model), dtype=np.float64)
    half = d_model // 2
    for start, (first, p1), (second, p2) in ((0, (t_day, w.p_day), (t_hour, w.p_hour)),
                                               (half, (lat_id, w.p_lat), (lng_id, w.p_lng))):
        a = first * scale * (2.0 * math.pi / p1)
        b = second * scale * (2.0 * math.pi / p2)
        rows[:, start + 0:start + half:4] = np.sin(a)
        rows[:, start + 1:start + half:4] = np.cos(a)
        rows[:, start + 2:start + half:4] = np.sin(b)
        rows[:, start + 3:start + half:4] = np.cos(b)
    return rows


def variant_frequency_pe(ctx: VisionPosition, d_model: int, w: Wavelengths = Wavelengths()) -> np.ndarray:
    return variant_frequency_rows(ctx.t_day, ctx.t_hour, ctx.lat_id, ctx.lng_id, d_model, w)[0]


def wavelength(group_index: int, d_model: int, p: float) -> float:
    """Wavelength of the group_index-th 4-dim group of one variable pair."""
    _checkEighths(d_model)
    if not 0 <= group_index < d_model // 8:
        raise ConfigError(f"group index {group_index} out of range [0, {d_model // 8})")
    return p * SINUSOID_BASE ** (4.0 * group_index / d_model)


def _visionRows(block: ImageBlock, d_model: int, w: Wavelengths) -> np.ndarray:
    if block.context is None:
        raise ConfigError("variant-frequency encoding needs a physical context for every image")
    t = temporal_position(block.context.timestamp)
    latIds, lngIds = block.context.idArrays()
    n = block.length
    return variant_frequency_rows(np.full(n, t // HOURS_PER_DAY), np.full(n, t % HOURS_PER_DAY),
                                  latIds, lngIds, d_model, w)


def build_pe_matrix(layout: TokenLayout, d_model: int, w: Wavelengths = Wavelengths(),
                    mode: Union[str, PEMode] = PEMode.VARIANT) -> PEMatrix:
    """
    Stack per-token embeddings. In variant mode text rows get standard_pe of
    their index in the sequence and vision rows the variant-frequency row of
    their patch; standard mode uses standard_pe everywhere; none is all zeros.
    """
    mode = PEMode.parse(mode)
    visionMask = layout.visionMask()

    if mode is PEMode.NONE:
        _checkEven(d_model)
        return PEMatrix(np.zeros((layout.seq_len, d_model)), d_model, visionMask)

    values = standard_pe_rows(np.arange(layout.seq_len), d_model)
    if mode is PEMode.VARIANT:
        _checkEighths(d_model)
        offset = 0
        for segment in layout.segments:
            if isinstance(segment, ImageBlock):
                values[offset:offset + segment.length] = _visionRows(segment, d_model, w)
            offset += segment.length

    return PEMatrix(values, d_model, visionMask)


def add_to_embeddings(E, pe: PEMatrix):
    """
    E + PE / d_model. E may be a numpy array or a torch tensor; its shape must
    match pe.values, which is (seq_len, d_model) or batched as
    (batch, seq_len, d_model).
    """
    if tuple(E.shape) != tuple(pe.values.shape):
        raise DataError(f"embedding shape {tuple(E.shape)} does not match PE shape {tuple(pe.values.shape)}")

    offset = pe.values / pe.d_model
    if isinstance(E, np.ndarray):
        return E + offset

    return E + torch.as_tensor(offset, dtype=E.dtype, device=E.device)
