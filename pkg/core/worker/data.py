"""
Typhoon tracks: synthetic generator, satellite-like image rendering,
prompt/label construction, dataset splitting and track CSV I/O.
"""
import datetime
import math
import re
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .exceptions import DataError, ForecastParseError
from .geo import GeoPoint, ImageSpec, PhysicalContext, Timestamp, normalize_longitude
from .variables import (DATETIME_CSV_FORMAT, DATETIME_PROMPT_FORMAT, DEFAULT_HISTORY, DEFAULT_HORIZON,
                        IMAGE_TOKEN, MAX_HOURLY_STEP_DEG, PRESSURE_MAX_HPA, PRESSURE_MIN_HPA, SPLIT_RATIOS,
                        TRACKS_CSV_COLUMNS)

__all__ = ["TrackRecord", "TyphoonTrack", "ForecastInstance", "SimParams", "synth_track", "render_image",
           "render_track_images", "build_prompt", "parse_forecast", "split_dataset", "window_instances",
           "instance_contexts", "load_csv", "save_csv", "SYSTEM_PROMPT"]

ONE_HOUR = datetime.timedelta(hours=1)

SYSTEM_PROMPT = ("You are a typhoon forecasting expert. Below are the past {history} hours of typhoon data and the "
                 "corresponding satellite images. Your task is to forecast the hourly data of the typhoon for the "
                 "next {horizon} hours, providing the forecast latitude, longitude, pressure in the same format as "
                 "the past data format.")
PAST_DATA = ("The corresponding satellite images are: {tags}.  The historical hourly data from {start} to {end} is "
             "{{latitude: [{lat}], longitude: [{lng}], pressure: [{pressure}]}}.")
LABEL_DATA = "The forecast hourly data is: {{latitude: [{lat}], longitude: [{lng}], pressure: [{pressure}].}}"

_arraysPattern = re.compile(r"\{latitude: \[([^\]]*)\], longitude: \[([^\]]*)\], pressure: \[([^\]]*)\]")


@dataclass(frozen=True)
class TrackRecord:
    time: datetime.datetime
    lat: float
    lng: float
    pressure: float

    @property
    def timestamp(self) -> Timestamp:
        return Timestamp.fromDatetime(self.time)

    @property
    def point(self) -> GeoPoint:
        return GeoPoint(self.lat, self.lng)


@dataclass
class TyphoonTrack:
    sequence_id: str
    records: Tuple[TrackRecord, ...]
    hidden_structure: Optional[np.ndarray] = None

    def __post_init__(self):
        self.records = tuple(self.records)

    def __len__(self):
        return len(self.records)

    def validate(self):
        for prev, record in zip(self.records, self.records[1:]):
            if record.time - prev.time != ONE_HOUR:
                raise DataError(f"track {self.sequence_id}: non-hourly step at "
                                f"{record.time.strftime(DATETIME_CSV_FORMAT)}")
            dLng = normalize_longitude(record.lng - prev.lng)
            if abs(record.lat - prev.lat) >= MAX_HOURLY_STEP_DEG or abs(dLng) >= MAX_HOURLY_STEP_DEG:
                raise DataError(f"track {self.sequence_id}: hourly displacement too large at "
                                f"{record.time.strftime(DATETIME_CSV_FORMAT)}")
        for record in self.records:
            if not PRESSURE_MIN_HPA < record.pressure < PRESSURE_MAX_HPA:
                raise DataError(f"track {self.sequence_id}: pressure {record.pressure} out of range at "
                                f"{record.time.strftime(DATETIME_CSV_FORMAT)}")
        return self


@dataclass
class ForecastInstance:
    sequence_id: str
    history: Tuple[TrackRecord, ...]
    images: np.ndarray
    label: Tuple[TrackRecord, ...]
    hidden: Optional[np.ndarray] = None

    def __post_init__(self):
        self.history = tuple(self.history)
        self.label = tuple(self.label)
        if len(self.images) != len(self.history):
            raise DataError(f"instance {self.sequence_id}: {len(self.images)} images for "
                            f"{len(self.history)} history records")


@dataclass(frozen=True)
class SimParams:
    seed: int = 0
    recurve_lat: float = 25.0
    beta_drift: float = 0.1
    intensity_cue_gain: float = 1.5
    noise_sigma: float = 0.02
    steering_speed: float = 0.3
    structure_memory: float = 0.8
    structure_lag: int = DEFAULT_HORIZON
    start_lat: Optional[float] = None
    start_lng: Optional[float] = None

    def __post_init__(self):
        if self.beta_drift <= 0 or self.intensity_cue_gain <= 0 or self.steering_speed <= 0:
            raise DataError("simulation gains must be positive")
        if self.noise_sigma < 0:
            raise DataError("noise_sigma must be non-negative")
        if not 0 <= self.structure_memory < 1:
            raise DataError("structure_memory must lie in [0, 1)")
        if self.structure_lag < 0:
            raise DataError("structure_lag must be non-negative")


def _hiddenStructure(rng: np.random.Generator, count: int, memory: float) -> np.ndarray:
    std = 0.5
    s = np.empty(count)
    s[0] = rng.normal(0.0, std)
    innovation = math.sqrt(1.0 - memory ** 2) * std
    for t in range(1, count):
        s[t] = memory * s[t - 1] + innovation * rng.normal()
    return np.clip(s, -1.0, 1.0)


def synth_track(params: SimParams, length: int, history: int = DEFAULT_HISTORY,
                horizon: int = DEFAULT_HORIZON, sequence_id: Optional[str] = None) -> TyphoonTrack:
    """
    Steering drifts west-northwest below recurve_lat and recurves northeast
    above it. The pressure tendency at hour t is driven by the hidden
    structure variable at hour t - structure_lag, which only the rendered
    imagery shows.
    """
    if length < history + horizon:
        raise DataError(f"track length {length} is shorter than history + horizon = {history + horizon}")

    rng = np.random.default_rng(params.seed)
    lat = params.start_lat if params.start_lat is not None else rng.uniform(8.0, 30.0)
    lng = normalize_longitude(params.start_lng if params.start_lng is not None else rng.uniform(125.0, 160.0))
    pressure = rng.uniform(960.0, 1000.0)
    start = datetime.datetime(int(rng.integers(1990, 2024)), 1, 1) + datetime.timedelta(
        days=int(rng.integers(150, 330)), hours=int(rng.integers(0, 24)))

    lag = params.structure_lag
    s = _hiddenStructure(rng, length + lag, params.structure_memory)

    records = []
    for t in range(length):
        lngOut = round(lng, 6)
        records.append(TrackRecord(start + t * ONE_HOUR, round(lat, 6), -180.0 if lngOut >= 180.0 else lngOut,
                                   round(pressure, 6)))

        steer = math.tanh((lat - params.recurve_lat) / 5.0)
        dLng = params.steering_speed * steer + params.noise_sigma * rng.normal()
        dLat = params.beta_drift * (1.0 + 0.5 * (1.0 - abs(steer))) + params.noise_sigma * rng.normal()
        filling = 0.3 if lat > params.recurve_lat + 5.0 else 0.0
        dP = -params.intensity_cue_gain * s[t] + filling + 0.02 * (985.0 - pressure)

        lat = float(np.clip(lat + np.clip(dLat, -1.9, 1.9), -60.0, 60.0))
        lng = normalize_longitude(lng + np.clip(dLng, -1.9, 1.9))
        pressure = float(np.clip(pressure + dP, 870.0, 1015.0))

    return TyphoonTrack(sequence_id or f"SYN{params.seed:05d}", records, s[lag:]).validate()


def render_image(record: TrackRecord, hidden_structure: float, spec: ImageSpec, seed: int,
                 noise: float = 0.02) -> np.ndarray:
    """
    Gaussian cloud mass centred on the storm. Positive structure stretches
    it east-west, negative north-south; zero gives a rotationally symmetric
    cloud. Pixel values lie in [0, 1].
    """
    px = spec.image_px
    offsets = (np.arange(px) - (px - 1) / 2.0) * spec.km_per_px
    east = offsets[None, :]
    north = -offsets[:, None]

    s = float(np.clip(hidden_structure, -1.0, 1.0))
    sigma = 250.0
    sigmaEast, sigmaNorth = sigma * (1.0 + 0.6 * s), sigma * (1.0 - 0.6 * s)
    amplitude = float(np.clip(0.55 + 0.35 * (1010.0 - record.pressure) / 120.0, 0.3, 0.95))

    image = amplitude * np.exp(-0.5 * ((east / sigmaEast) ** 2 + (north / sigmaNorth) ** 2))
    rng = np.random.default_rng(seed)
    image = image + rng.uniform(-noise, noise, size=image.shape)
    return np.clip(image, 0.0, 1.0)


def render_track_images(track: TyphoonTrack, spec: ImageSpec, seed: int, noise: float = 0.02) -> np.ndarray:
    if track.hidden_structure is None:
        raise DataError(f"track {track.sequence_id} has no hidden structure to render")
    return np.stack([render_image(record, track.hidden_structure[t], spec, seed=seed * 100003 + t,
                                  noise=noise)
                     for t, record in enumerate(track.records)])


def _formatValues(values: Sequence[float], digits: int) -> str:
    return ", ".join(str(round(float(v), digits)) for v in values)


def _arrays(records: Sequence[TrackRecord]) -> Dict[str, str]:
    return {"lat": _formatValues([r.lat for r in records], 2),
            "lng": _formatValues([r.lng for r in records], 2),
            "pressure": _formatValues([r.pressure for r in records], 1)}


def build_prompt(instance: ForecastInstance) -> Tuple[str, str]:
    if not instance.history or not instance.label:
        raise DataError(f"instance {instance.sequence_id} needs non-empty history and label")
    if len(instance.images) != len(instance.history):
        raise DataError(f"instance {instance.sequence_id}: image count does not match history length")

    system = SYSTEM_PROMPT.format(history=len(instance.history), horizon=len(instance.label))
    past = PAST_DATA.format(tags=" ".join([IMAGE_TOKEN] * len(instance.history)),
                            start=instance.history[0].time.strftime(DATETIME_PROMPT_FORMAT),
                            end=instance.history[-1].time.strftime(DATETIME_PROMPT_FORMAT),
                            **_arrays(instance.history))
    label = LABEL_DATA.format(**_arrays(instance.label))
    return f"{system}\n{past}", label


def parse_forecast(text: str, expected: Optional[int] = None) -> Dict[str, List[float]]:
    match = _arraysPattern.search(text)
    if match is None:
        raise ForecastParseError(f"no latitude/longitude/pressure arrays found in {text[:80]!r}")

    parsed = {}
    for name, body in zip(("latitude", "longitude", "pressure"), match.groups()):
        try:
            values = [float(v) for v in body.split(",")] if body.strip() else []
        except ValueError:
            raise ForecastParseError(f"malformed {name} array [{body}]")
        if expected is not None and len(values) != expected:
            raise ForecastParseError(f"{name} array has {len(values)} values, expected {expected}")
        parsed[name] = values

    return parsed


def split_dataset(tracks: Sequence[TyphoonTrack], ratios=SPLIT_RATIOS, seed: int = 0):
    """Split at sequence granularity: floor(0.7n) train, floor(0.15n) val, remainder test."""
    if len(tracks) < 3:
        raise DataError(f"need at least 3 sequences to split, got {len(tracks)}")
    if len(ratios) != 3 or min(ratios) < 0:
        raise DataError(f"invalid split ratios {ratios}")

    n = len(tracks)
    nTrain = math.floor(ratios[0] * n + 1e-9)
    nVal = math.floor(ratios[1] * n + 1e-9)
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [tracks[i] for i in order]
    return shuffled[:nTrain], shuffled[nTrain:nTrain + nVal], shuffled[nTrain + nVal:]


def window_instances(track: TyphoonTrack, images: np.ndarray, history: int = DEFAULT_HISTORY,
                     horizon: int = DEFAULT_HORIZON) -> List[ForecastInstance]:
    """Sliding stride-1 windows: len(track) - history - horizon + 1 instances."""
    if len(images) != len(track):
        raise DataError(f"track {track.sequence_id}: {len(images)} images for {len(track)} records")

    instances = []
    for start in range(len(track) - history - horizon + 1):
        end = start + history
        hidden = None if track.hidden_structure is None else track.hidden_structure[start:end]
        instances.append(ForecastInstance(track.sequence_id, track.records[start:end], images[start:end],
                                          track.records[end:end + horizon], hidden))
    return instances


def instance_contexts(instance: ForecastInstance, spec: ImageSpec) -> List[PhysicalContext]:
    return [PhysicalContext.build(record.timestamp, record.point, spec) for record in instance.history]


def save_csv(tracks: Sequence[TyphoonTrack], path: str):
    rows = [(track.sequence_id, record.time.strftime(DATETIME_CSV_FORMAT), record.lat, record.lng, record.pressure)
            for track in tracks for record in track.records]
    frame = pd.DataFrame(rows, columns=TRACKS_CSV_COLUMNS)
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n", encoding="utf-8")


def load_csv(path: str) -> List[TyphoonTrack]:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: missing header")
    except pd.errors.ParserError as e:
        raise DataError(f"{path}: {e}")

    if list(frame.columns) != TRACKS_CSV_COLUMNS:
        raise DataError(f"{path}: expected header {','.join(TRACKS_CSV_COLUMNS)}, got {','.join(frame.columns)}")

    grouped: "OrderedDict[str, List[TrackRecord]]" = OrderedDict()
    for lineNumber, row in enumerate(frame.itertuples(index=False), start=2):
        try:
            moment = datetime.datetime.strptime(row.datetime, DATETIME_CSV_FORMAT)
            record = TrackRecord(moment, float(row.lat), float(row.lng), float(row.pressure))
        except ValueError as e:
            raise DataError(f"{path}:{lineNumber}: malformed row ({e})")
        if not row.sequence_id:
            raise DataError(f"{path}:{lineNumber}: empty sequence_id")
        grouped.setdefault(row.sequence_id, []).append(record)

    return [TyphoonTrack(sequenceId, records).validate() for sequenceId, records in grouped.items()]
