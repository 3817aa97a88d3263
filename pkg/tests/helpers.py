import datetime

import numpy as np

from core.worker.data import (ForecastInstance, SimParams, TrackRecord, render_track_images, synth_track,
                              window_instances)
from core.worker.geo import ImageSpec
from core.worker.model import ModelConfig

TINY_IMAGE = ImageSpec(16, 8, 40.0)


def tiny_config(**values) -> ModelConfig:
    settings = dict(d_model=32, n_layers=1, n_heads=2, d_ff=64, image=TINY_IMAGE, seed=0)
    settings.update(values)
    return ModelConfig(**settings)


def tiny_instances(seed: int = 0, count: int = 1, history: int = 3, horizon: int = 3):
    track = synth_track(SimParams(seed=seed, structure_lag=horizon), history + horizon + count - 1,
                        history, horizon, sequence_id=f"SYN{seed:04d}")
    images = render_track_images(track, TINY_IMAGE, seed=seed)
    return window_instances(track, images, history, horizon)


YUTU_LAT = [11.65, 11.7, 11.75, 11.8, 11.85, 11.9, 11.95, 11.99, 12.04, 12.09, 12.14, 12.2]
YUTU_LNG = [151.61, 151.41, 151.2, 150.99, 150.79, 150.6, 150.42, 150.26, 150.11, 149.97, 149.83, 149.7]
YUTU_P = [974.2, 973.3, 972.5, 971.7, 970.8, 970.0, 967.5, 965.0, 962.5, 960.0, 957.5, 955.0]
YUTU_LABEL_LAT = [12.26, 12.34, 12.42, 12.5, 12.6, 12.7, 12.81, 12.93, 13.05, 13.17, 13.29, 13.4]
YUTU_LABEL_LNG = [149.57, 149.44, 149.31, 149.18, 149.04, 148.9, 148.76, 148.61, 148.46, 148.31, 148.15, 148.0]
YUTU_LABEL_P = [954.2, 953.3, 952.5, 951.7, 950.8, 950.0, 945.8, 941.7, 937.5, 933.3, 929.2, 925.0]


def _records(start, lats, lngs, pressures):
    return [TrackRecord(start + datetime.timedelta(hours=i), lat, lng, p)
            for i, (lat, lng, p) in enumerate(zip(lats, lngs, pressures))]


def yutu() -> ForecastInstance:
    """Twelve hours of Typhoon Yutu (2018) and the following twelve as label."""
    start = datetime.datetime(2018, 10, 23, 1)
    history = _records(start, YUTU_LAT, YUTU_LNG, YUTU_P)
    label = _records(start + datetime.timedelta(hours=12), YUTU_LABEL_LAT, YUTU_LABEL_LNG, YUTU_LABEL_P)
    return ForecastInstance("YUTU", history, np.zeros((12, 8, 8)), label)
