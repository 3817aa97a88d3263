"""
Physical metadata for image tokens: calendar position of the observation and
geographic coordinates of every image patch center.
"""
import calendar
import datetime
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import DataError, ProjectionError
from .variables import (DEFAULT_IMAGE_PX, DEFAULT_KM_PER_PX, DEFAULT_PATCH_PX,
                        HOURS_PER_DAY, KM_PER_DEGREE, MAX_PROJECTION_LATITUDE)

__all__ = ["Timestamp", "GeoPoint", "ImageSpec", "PhysicalContext",
           "day_of_year", "temporal_position", "patch_centers", "patch_center_arrays",
           "shift_to_id_ranges", "id_ranges_to_point", "normalize_longitude"]


def normalize_longitude(lng: float) -> float:
    return float(((lng + 180.0) % 360.0) - 180.0)


def day_of_year(year: int, month: int, day: int) -> int:
    """Zero-based ordinal day; 365 is only reachable in leap years."""
    if not 1 <= year <= 9999:
        raise DataError(f"invalid date: year {year} out of range")
    if not 1 <= month <= 12:
        raise DataError(f"invalid date: month {month} out of range")
    lastDay = calendar.monthrange(year, month)[1]
    if not 1 <= day <= lastDay:
        raise DataError(f"invalid date: day {day} out of range for {year}-{month:02d}")

    return datetime.date(year, month, day).timetuple().tm_yday - 1


@dataclass(frozen=True)
class Timestamp:
    year: int
    day_of_year: int
    hour_of_day: int

    def __post_init__(self):
        maxDay = 365 if calendar.isleap(self.year) else 364
        if not 0 <= self.day_of_year <= maxDay:
            raise DataError(f"invalid timestamp: day_of_year {self.day_of_year} not in [0, {maxDay}]")
        if not 0 <= self.hour_of_day < HOURS_PER_DAY:
            raise DataError(f"invalid timestamp: hour_of_day {self.hour_of_day} not in [0, 23]")

    @classmethod
    def fromDatetime(cls, moment: datetime.datetime) -> "Timestamp":
        return cls(moment.year, day_of_year(moment.year, moment.month, moment.day), moment.hour)


def temporal_position(ts: Timestamp) -> float:
    return float(ts.day_of_year * HOURS_PER_DAY + ts.hour_of_day)


@dataclass(frozen=True)
class GeoPoint:
    lat_deg: float
    lng_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.lat_deg) and math.isfinite(self.lng_deg)):
            raise DataError(f"non-finite coordinates ({self.lat_deg}, {self.lng_deg})")
        object.__setattr__(self, "lat_deg", float(min(90.0, max(-90.0, self.lat_deg))))
        object.__setattr__(self, "lng_deg", float(normalize_longitude(self.lng_deg)))


@dataclass(frozen=True)
class ImageSpec:
    image_px: int = DEFAULT_IMAGE_PX
    patch_px: int = DEFAULT_PATCH_PX
    km_per_px: float = DEFAULT_KM_PER_PX

    def __post_init__(self):
        if self.image_px <= 0 or self.patch_px <= 0:
            raise DataError("image_px and patch_px must be positive")
        if self.image_px % self.patch_px:
            raise DataError(f"image_px {self.image_px} is not divisible by patch_px {self.patch_px}")
        if not self.km_per_px > 0:
            raise DataError("km_per_px must be positive")

    @property
    def n_row(self) -> int:
        return self.image_px // self.patch_px

    @property
    def n_col(self) -> int:
        return self.image_px // self.patch_px

    @property
    def n_patches(self) -> int:
        return self.n_row * self.n_col

    @property
    def patch_km(self) -> float:
        return self.patch_px * self.km_per_px


def patch_center_arrays(center: GeoPoint, spec: ImageSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Local equirectangular projection of patch centers.
    Returns (lat, lng) arrays of shape (n_row, n_col); longitudes are not wrapped.
    """
    if abs(center.lat_deg) >= MAX_PROJECTION_LATITUDE:
        raise ProjectionError(f"center latitude {center.lat_deg} is too close to a pole for patch projection")

    rows = np.arange(spec.n_row, dtype=np.float64)
    cols = np.arange(spec.n_col, dtype=np.float64)
    north = ((spec.n_row - 1) / 2.0 - rows) * spec.patch_km
    east = (cols - (spec.n_col - 1) / 2.0) * spec.patch_km

    lat = center.lat_deg + north / KM_PER_DEGREE
    lng = center.lng_deg + east / (KM_PER_DEGREE * math.cos(math.radians(center.lat_deg)))

    return np.repeat(lat[:, None], spec.n_col, axis=1), np.repeat(lng[None, :], spec.n_row, axis=0)


def patch_centers(center: GeoPoint, spec: ImageSpec) -> Tuple[Tuple[GeoPoint, ...], ...]:
    lat, lng = patch_center_arrays(center, spec)
    return tuple(tuple(GeoPoint(float(lat[r, c]), float(lng[r, c])) for c in range(spec.n_col))
                 for r in range(spec.n_row))


def shift_to_id_ranges(p: GeoPoint) -> Tuple[float, float]:
    lng_id = p.lng_deg % 360.0
    # tiny negative longitudes round up to exactly 360
    return p.lat_deg + 90.0, 0.0 if lng_id >= 360.0 else lng_id


def id_ranges_to_point(lat_id: float, lng_id: float) -> GeoPoint:
    return GeoPoint(lat_id - 90.0, lng_id)


@dataclass(frozen=True)
class PhysicalContext:
    timestamp: Timestamp
    center: GeoPoint
    patch_centers: Tuple[GeoPoint, ...]
    n_row: int
    n_col: int

    def __post_init__(self):
        if len(self.patch_centers) != self.n_row * self.n_col:
            raise DataError(f"patch grid has {len(self.patch_centers)} entries, "
                            f"expected {self.n_row}x{self.n_col}")

    @classmethod
    def build(cls, timestamp: Timestamp, center: GeoPoint, spec: ImageSpec) -> "PhysicalContext":
        grid = patch_centers(center, spec)
        return cls(timestamp, center, tuple(p for row in grid for p in row), spec.n_row, spec.n_col)

    def idArrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Shifted (lat_id, lng_id) of every patch in row-major order."""
        ids = np.array([shift_to_id_ranges(p) for p in self.patch_centers], dtype=np.float64)
        return ids[:, 0], ids[:, 1]
