"""
Forecast scoring: MAE/RMSE per variable and per lead time, great-circle
track error, and the regression dump used for scatter plots.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .data import ForecastInstance
from .exceptions import DataError
from .geo import GeoPoint
from .variables import DATA_FORMAT_METRICS, DATA_FORMAT_METRICS_VERSION, EARTH_RADIUS_KM
from .vartypes import MetricsTyped

__all__ = ["VARIABLES", "mae", "rmse", "great_circle_km", "great_circle_km_arrays", "truth_arrays",
           "VariableMetrics", "MetricsReport", "evaluate", "regression_dump", "load_regression",
           "metrics_from_regression"]

VARIABLES = ("pressure", "latitude", "longitude")

Forecast = Optional[Dict[str, Sequence[float]]]


def _pair(pred, truth) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    if len(pred) != len(truth):
        raise DataError(f"prediction length {len(pred)} does not match truth length {len(truth)}")
    if len(pred) == 0:
        raise DataError("cannot score empty predictions")
    return pred, truth


def _unwrapped(name: str, pred, truth):
    """Longitude predictions moved onto the branch nearest the truth."""
    if name != "longitude":
        return pred
    pred, truth = _pair(pred, truth)
    return truth + ((pred - truth + 180.0) % 360.0 - 180.0)


def mae(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def rmse(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def great_circle_km_arrays(lat1, lng1, lat2, lng2) -> np.ndarray:
    """Vectorised haversine distance on a sphere of radius EARTH_RADIUS_KM."""
    lat1, lng1, lat2, lng2 = (np.radians(np.asarray(v, dtype=np.float64)) for v in (lat1, lng1, lat2, lng2))
    a = np.sin((lat2 - lat1) / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lng2 - lng1) / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def great_circle_km(a: GeoPoint, b: GeoPoint) -> float:
    return float(great_circle_km_arrays(a.lat_deg, a.lng_deg, b.lat_deg, b.lng_deg))


def truth_arrays(instance: ForecastInstance) -> Dict[str, List[float]]:
    """Label arrays at the precision the label text carries (2 decimals for position, 1 for pressure)."""
    return {"latitude": [round(r.lat, 2) for r in instance.label],
            "longitude": [round(r.lng, 2) for r in instance.label],
            "pressure": [round(r.pressure, 1) for r in instance.label]}


@dataclass
class VariableMetrics:
    mae: float
    rmse: float
    per_lead_mae: List[float]
    per_lead_rmse: List[float]


@dataclass
class MetricsReport:
    horizon: int
    instance_count: int
    parse_failure_count: int
    variables: Dict[str, VariableMetrics] = field(default_factory=dict)
    distance_mae_km: float = 0.0
    distance_terminal_km: float = 0.0
    per_lead_distance_km: List[float] = field(default_factory=list)

    def __getitem__(self, variable: str) -> VariableMetrics:
        return self.variables[variable]

    def to_dict(self) -> MetricsTyped:
        return {"formatType": DATA_FORMAT_METRICS,
                "formatVersion": DATA_FORMAT_METRICS_VERSION,
                "horizon": self.horizon,
                "instanceCount": self.instance_count,
                "parseFailureCount": self.parse_failure_count,
                "variables": {name: {"mae": m.mae, "rmse": m.rmse, "perLeadMae": list(m.per_lead_mae),
                                     "perLeadRmse": list(m.per_lead_rmse)}
                              for name, m in self.variables.items()},
                "distance": {"maeKm": self.distance_mae_km, "terminalKm": self.distance_terminal_km,
                             "perLeadKm": list(self.per_lead_distance_km)}}


def _usable(forecast: Forecast, horizon: int) -> bool:
    if forecast is None:
        return False
    try:
        return all(len(forecast[name]) >= horizon and np.all(np.isfinite(np.asarray(forecast[name][:horizon],
                                                                                     dtype=np.float64)))
                   for name in VARIABLES)
    except (KeyError, TypeError, ValueError):
        return False


def evaluate(forecasts: Sequence[Forecast], truths: Sequence[Union[Dict[str, Sequence[float]], ForecastInstance]],
             horizon: int, lead_time: Optional[int] = None) -> MetricsReport:
    """
    Score parsed forecasts against the truth arrays. A forecast that is None,
    short, or non-finite counts as a parse failure and is left out of every
    mean. `lead_time` restricts scoring to leads 1..lead_time.
    """
    if len(forecasts) != len(truths):
        raise DataError(f"{len(forecasts)} forecasts for {len(truths)} truths")
    leads = horizon if lead_time is None else lead_time
    if not 0 < leads <= horizon:
        raise DataError(f"lead time {lead_time} outside 1..{horizon}")

    preds = {name: [] for name in VARIABLES}
    trues = {name: [] for name in VARIABLES}
    failures = 0
    for forecast, truth in zip(forecasts, truths):
        if isinstance(truth, ForecastInstance):
            truth = truth_arrays(truth)
        if len(truth["pressure"]) < leads:
            raise DataError(f"truth has {len(truth['pressure'])} leads, expected {horizon}")
        if not _usable(forecast, leads):
            failures += 1
            continue
        for name in VARIABLES:
            preds[name].append(np.asarray(forecast[name][:leads], dtype=np.float64))
            trues[name].append(np.asarray(truth[name][:leads], dtype=np.float64))

    if not preds["pressure"]:
        raise DataError(f"no parseable forecasts among {len(forecasts)}")

    report = MetricsReport(horizon=leads, instance_count=len(preds["pressure"]), parse_failure_count=failures)
    P = {name: np.stack(preds[name]) for name in VARIABLES}
    T = {name: np.stack(trues[name]) for name in VARIABLES}
    for name in VARIABLES:
        pred = _unwrapped(name, P[name], T[name]).reshape(T[name].shape)
        error = pred - T[name]
        report.variables[name] = VariableMetrics(
            mae=mae(pred, T[name]), rmse=rmse(pred, T[name]),
            per_lead_mae=[float(v) for v in np.mean(np.abs(error), axis=0)],
            per_lead_rmse=[float(v) for v in np.sqrt(np.mean(error ** 2, axis=0))])

    distance = great_circle_km_arrays(T["latitude"], T["longitude"], P["latitude"], P["longitude"])
    report.per_lead_distance_km = [float(v) for v in distance.mean(axis=0)]
    report.distance_mae_km = float(distance.mean())
    report.distance_terminal_km = report.per_lead_distance_km[-1]
    return report


def regression_dump(forecasts: Sequence[Forecast], truths: Sequence[Union[Dict[str, Sequence[float]],
                                                                            ForecastInstance]],
                    path: str, horizon: Optional[int] = None) -> pd.DataFrame:
    """CSV with columns variable, lead_time, truth, pred; one row per usable instance, lead and variable."""
    rows = []
    for index, (forecast, truth) in enumerate(zip(forecasts, truths)):
        if isinstance(truth, ForecastInstance):
            truth = truth_arrays(truth)
        leads = horizon or len(truth["pressure"])
        if not _usable(forecast, leads):
            continue
        for name in VARIABLES:
            for lead in range(leads):
                rows.append((index, name, lead + 1, float(truth[name][lead]), float(forecast[name][lead])))

    frame = pd.DataFrame(rows, columns=["instance", "variable", "lead_time", "truth", "pred"])
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    return frame


def load_regression(path: str) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = {"variable", "lead_time", "truth", "pred"} - set(frame.columns)
    if missing:
        raise DataError(f"{path}: missing columns {sorted(missing)}")
    return frame


def metrics_from_regression(frame: pd.DataFrame) -> Dict[str, Dict[str, float]]:
    return {name: {"mae": mae(_unwrapped(name, group["pred"], group["truth"]), group["truth"]),
                   "rmse": rmse(_unwrapped(name, group["pred"], group["truth"]), group["truth"])}
            for name, group in frame.groupby("variable", sort=False)}
