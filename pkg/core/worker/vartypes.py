from typing import TypedDict, List, Dict, Optional


class MetadataTyped(TypedDict):
    formatVersion: int
    formatType: str


class SplitManifestTyped(MetadataTyped):
    seed: int
    tracksSha256: str
    train: List[str]
    val: List[str]
    test: List[str]


class ForecastArraysTyped(TypedDict):
    latitude: List[float]
    longitude: List[float]
    pressure: List[float]


class ForecastRecordTyped(TypedDict):
    sequenceId: str
    start: str
    text: str
    forecast: Optional[ForecastArraysTyped]
    error: Optional[str]
    truth: ForecastArraysTyped


class ForecastsTyped(MetadataTyped):
    split: str
    horizon: int
    oracle: bool
    records: List[ForecastRecordTyped]


class VariableMetricsTyped(TypedDict):
    mae: float
    rmse: float
    perLeadMae: List[float]
    perLeadRmse: List[float]


class DistanceMetricsTyped(TypedDict):
    maeKm: float
    terminalKm: float
    perLeadKm: List[float]


class MetricsTyped(MetadataTyped):
    horizon: int
    instanceCount: int
    parseFailureCount: int
    variables: Dict[str, VariableMetricsTyped]
    distance: DistanceMetricsTyped


class CheckpointTyped(MetadataTyped):
    config: dict
    vocabulary: str
    state: dict
