"""
Ablation runner: one trained model per (cell, seed), scored on a fixed
test split and reduced to the median over seeds.
"""
import itertools
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd
import psutil

from .basedispatch import SendNotification
from .data import ForecastInstance, parse_forecast
from .encoding import PEMode
from .evaluate import MetricsReport, evaluate
from .exceptions import ConfigError, ErrorTuple, ForecastParseError
from .indexing import IndexingScheme
from .model import CharVocabulary, ModelConfig, generate, train
from ..notifications import NotificationType

__all__ = ["AblationCell", "TrainSettings", "AblationRow", "AblationResult", "AXES", "TABLE_PRESET",
           "TABLE_COLUMNS", "ablation_cells", "table_cells", "run_ablation", "forecast_all", "default_workers"]

AXES = {
    "vision": (True, False),
    "scheme": tuple(IndexingScheme),
    "negate": (True, False),
    "pe": tuple(PEMode),
}

TABLE_COLUMNS = ["model", "use_vision", "scheme", "negate", "pe", "seeds", "failed_seeds",
                 "intensity_mae", "intensity_rmse", "latitude_mae", "latitude_rmse",
                 "longitude_mae", "longitude_rmse", "distance_mae_km", "distance_terminal_km",
                 "parse_failures", "error"]


@dataclass(frozen=True)
class AblationCell:
    name: str
    use_vision: bool = True
    scheme: IndexingScheme = IndexingScheme.PHYSICS
    negate: bool = True
    pe: PEMode = PEMode.VARIANT

    def apply(self, cfg: ModelConfig) -> ModelConfig:
        return replace(cfg, use_vision=self.use_vision, scheme=self.scheme, negate=self.negate,
                       use_pe=self.pe is not PEMode.NONE, use_variant_pe=self.pe is PEMode.VARIANT,
                       use_standard_pe_only=self.pe is PEMode.STANDARD)

    @classmethod
    def fromConfig(cls, cfg: ModelConfig, name: str = "base") -> "AblationCell":
        return cls(name, cfg.use_vision, cfg.scheme, cfg.negate, cfg.pe_mode)


PIPE_CELL = AblationCell("PIPE")

TABLE_PRESET = (
    replace(PIPE_CELL, name="w/o vision", use_vision=False),
    replace(PIPE_CELL, name="w/o 3D indexing (using sequence)", scheme=IndexingScheme.SEQUENTIAL),
    replace(PIPE_CELL, name="w/o physics-informed indexing (using 3D)", scheme=IndexingScheme.THREE_D),
    replace(PIPE_CELL, name="w/o negative indexing", negate=False),
    replace(PIPE_CELL, name="w/o entire sinusoidal function", pe=PEMode.NONE),
    replace(PIPE_CELL, name="w/o variant-frequency sinusoidal function", pe=PEMode.STANDARD),
    PIPE_CELL,
)


def _cellName(cell: AblationCell) -> str:
    return (f"vision={'on' if cell.use_vision else 'off'} scheme={cell.scheme.value} "
            f"negate={'on' if cell.negate else 'off'} pe={cell.pe.value}")


def ablation_cells(base: ModelConfig, axes: Union[str, Iterable[str]]) -> List[AblationCell]:
    """
    Cartesian product over the requested axes; unrequested axes keep the base
    config's value. `axes="table"` returns the seven-row preset instead.
    """
    if isinstance(axes, str):
        axes = [a.strip() for a in axes.split(",") if a.strip()]
    axes = list(axes)
    if axes == ["table"]:
        return table_cells()

    unknown = [a for a in axes if a not in AXES]
    if unknown:
        raise ConfigError(f"unknown ablation axes {unknown}; choose from {sorted(AXES)} or 'table'")
    if len(set(axes)) != len(axes):
        raise ConfigError(f"duplicate ablation axes {axes}")

    baseCell = AblationCell.fromConfig(base)
    keyFor = {"vision": "use_vision", "scheme": "scheme", "negate": "negate", "pe": "pe"}
    cells = []
    for values in itertools.product(*(AXES[a] for a in axes)):
        cell = replace(baseCell, **{keyFor[a]: v for a, v in zip(axes, values)})
        cells.append(replace(cell, name=_cellName(cell)))
    return cells


def table_cells() -> List[AblationCell]:
    return list(TABLE_PRESET)


def default_workers() -> int:
    return max(1, min(4, psutil.cpu_count(logical=False) or 1))


@dataclass
class TrainSettings:
    epochs: int = 1
    lr: float = 3e-4
    batch_size: int = 8
    max_steps: Optional[int] = None
    max_new: int = 256
    lead_time: Optional[int] = None


@dataclass
class AblationRow:
    cell: AblationCell
    reports: Dict[int, MetricsReport] = field(default_factory=dict)
    errors: Dict[int, str] = field(default_factory=dict)

    def median(self, getter) -> Optional[float]:
        values = [getter(r) for _, r in sorted(self.reports.items())]
        return statistics.median(values) if values else None

    def toRecord(self) -> dict:
        return {"model": self.cell.name,
                "use_vision": self.cell.use_vision,
                "scheme": self.cell.scheme.value,
                "negate": self.cell.negate,
                "pe": self.cell.pe.value,
                "seeds": len(self.reports),
                "failed_seeds": len(self.errors),
                "intensity_mae": self.median(lambda r: r["pressure"].mae),
                "intensity_rmse": self.median(lambda r: r["pressure"].rmse),
                "latitude_mae": self.median(lambda r: r["latitude"].mae),
                "latitude_rmse": self.median(lambda r: r["latitude"].rmse),
                "longitude_mae": self.median(lambda r: r["longitude"].mae),
                "longitude_rmse": self.median(lambda r: r["longitude"].rmse),
                "distance_mae_km": self.median(lambda r: r.distance_mae_km),
                "distance_terminal_km": self.median(lambda r: r.distance_terminal_km),
                "parse_failures": sum(r.parse_failure_count for r in self.reports.values()),
                "error": "; ".join(f"seed {s}: {e}" for s, e in sorted(self.errors.items()))}


@dataclass
class AblationResult:
    rows: List[AblationRow]

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.toRecord() for row in self.rows], columns=TABLE_COLUMNS)

    def save(self, path: str) -> pd.DataFrame:
        frame = self.frame()
        frame.to_csv(path, index=False, lineterminator="\n", float_format="%.6f")
        return frame

    def row(self, name: str) -> AblationRow:
        for row in self.rows:
            if row.cell.name == name:
                return row
        raise KeyError(name)


def forecast_all(model, instances: Sequence[ForecastInstance], vocab: CharVocabulary,
                 max_new: int = 256) -> List[Tuple[str, Optional[dict]]]:
    """Greedy forecast text and its parsed arrays (None when unparseable) per instance."""
    results = []
    for instance in instances:
        text = generate(model, instance, vocab, max_new=max_new)
        try:
            parsed = parse_forecast(text, len(instance.label))
        except ForecastParseError as e:
            SendNotification(NotificationType.ForecastParseFailure, instance.sequence_id, str(e))
            parsed = None
        results.append((text, parsed))
    return results


def _runCell(cell: AblationCell, seed: int, trainSet, testSet, base: ModelConfig,
             settings: TrainSettings, vocab: CharVocabulary) -> MetricsReport:
    cfg = replace(cell.apply(base), seed=seed)
    model, _ = train(trainSet, cfg, epochs=settings.epochs, lr=settings.lr, batch_size=settings.batch_size,
                     vocab=vocab, max_steps=settings.max_steps)
    parsed = [p for _, p in forecast_all(model, testSet, vocab, settings.max_new)]
    horizon = len(testSet[0].label)
    return evaluate(parsed, testSet, horizon, lead_time=settings.lead_time)


def run_ablation(dataset: Tuple[Sequence[ForecastInstance], Sequence[ForecastInstance]], base_cfg: ModelConfig,
                 axes: Union[str, Iterable[str]], seeds: Sequence[int] = (0,),
                 settings: Optional[TrainSettings] = None, workers: Optional[int] = None,
                 vocab: Optional[CharVocabulary] = None) -> AblationResult:
    """
    `dataset` is the (train, test) instance pair shared by every cell. Cells
    run on a thread pool; a cell whose training fails records the error and
    the run continues. Rows come back in cell order.
    """
    trainSet, testSet = dataset
    if not testSet:
        raise ConfigError("ablation needs a non-empty test split")
    if not seeds:
        raise ConfigError("ablation needs at least one seed")
    settings = settings or TrainSettings()
    vocab = vocab or CharVocabulary()
    cells = ablation_cells(base_cfg, axes)
    rows = [AblationRow(cell) for cell in cells]

    SendNotification(NotificationType.AblationStarted, len(cells), list(seeds))

    def job(index: int, seed: int):
        cell = cells[index]
        SendNotification(NotificationType.AblationCellStarted, cell.name, seed)
        try:
            report = _runCell(cell, seed, trainSet, testSet, base_cfg, settings, vocab)
        except Exception as e:
            message = ErrorTuple(e)[1]
            SendNotification(NotificationType.AblationCellFailed, cell.name, seed, message)
            return index, seed, None, message
        SendNotification(NotificationType.AblationCellFinished, cell.name, seed, report.distance_mae_km)
        return index, seed, report, None

    jobs = [(i, s) for i in range(len(cells)) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers or default_workers()) as executor:
        for index, seed, report, error in executor.map(lambda a: job(*a), jobs):
            if report is not None:
                rows[index].reports[seed] = report
            else:
                rows[index].errors[seed] = error

    SendNotification(NotificationType.AblationFinished, len(cells))
    return AblationResult(rows)
