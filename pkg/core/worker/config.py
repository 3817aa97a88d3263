import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Dict, Iterable, List, Optional

from .dataversion import DataClass, DataVariable
from .encoding import Wavelengths
from .exceptions import ConfigError
from .geo import ImageSpec
from .indexing import IndexingScheme, VideoParams
from .model import CharVocabulary, ModelConfig
from .rope import RopeConfig
from .variables import (DATA_FORMAT_RUN_CONFIG, DATA_FORMAT_RUN_CONFIG_VERSION, DEFAULT_HISTORY, DEFAULT_HORIZON,
                        DEFAULT_IMAGE_PX, DEFAULT_KM_PER_PX, DEFAULT_PATCH_PX, ROPE_BASE, SPLIT_RATIOS)
from .data import SimParams


class RunConfig(DataClass):
    DataVariable(DATA_FORMAT_RUN_CONFIG, 0, "formatVersion")
    formatVersion: int = DATA_FORMAT_RUN_CONFIG_VERSION

    DataVariable(DATA_FORMAT_RUN_CONFIG, 0, "formatType")
    formatType: str = DATA_FORMAT_RUN_CONFIG

    # data
    DataVariable(formatType, 1, "seed")
    seed: int = 0

    DataVariable(formatType, 1, "tracks")
    tracks: int = 10

    DataVariable(formatType, 1, "length")
    length: int = 48

    DataVariable(formatType, 1, "history")
    history: int = DEFAULT_HISTORY

    DataVariable(formatType, 1, "horizon")
    horizon: int = DEFAULT_HORIZON

    DataVariable(formatType, 1, "splitRatios")
    splitRatios: List[float] = list(SPLIT_RATIOS)

    DataVariable(formatType, 1, "recurveLat")
    recurveLat: float = 25.0

    DataVariable(formatType, 1, "betaDrift")
    betaDrift: float = 0.1

    DataVariable(formatType, 1, "intensityCueGain")
    intensityCueGain: float = 1.5

    DataVariable(formatType, 1, "noiseSigma")
    noiseSigma: float = 0.02

    DataVariable(formatType, 1, "imageNoise")
    imageNoise: float = 0.02

    # image geometry
    DataVariable(formatType, 1, "imagePx")
    imagePx: int = DEFAULT_IMAGE_PX

    DataVariable(formatType, 1, "patchPx")
    patchPx: int = DEFAULT_PATCH_PX

    DataVariable(formatType, 1, "kmPerPx")
    kmPerPx: float = DEFAULT_KM_PER_PX

    # positional encoding
    DataVariable(formatType, 1, "scheme")
    scheme: str = IndexingScheme.PHYSICS.value

    DataVariable(formatType, 1, "negate")
    negate: bool = True

    DataVariable(formatType, 1, "useVision")
    useVision: bool = True

    DataVariable(formatType, 1, "useVariantPe")
    useVariantPe: bool = True

    DataVariable(formatType, 1, "useStandardPeOnly")
    useStandardPeOnly: bool = False

    DataVariable(formatType, 1, "usePe")
    usePe: bool = True

    DataVariable(formatType, 1, "useRope")
    useRope: bool = True

    DataVariable(formatType, 1, "wavelengths")
    wavelengths: List[float] = [366.0, 24.0, 180.0, 360.0]

    DataVariable(formatType, 1, "tokensPerSecond")
    tokensPerSecond: float = 1.0

    DataVariable(formatType, 1, "temporalPatchSize")
    temporalPatchSize: int = 2

    DataVariable(formatType, 1, "fps")
    fps: float = 2.0

    DataVariable(formatType, 1, "ropeBase")
    ropeBase: float = ROPE_BASE

    DataVariable(formatType, 1, "ropeSections")
    ropeSections: List[int] = []

    DataVariable(formatType, 1, "ropeSectionRestart")
    ropeSectionRestart: bool = False

    # model and training
    DataVariable(formatType, 1, "dModel")
    dModel: int = 128

    DataVariable(formatType, 1, "nLayers")
    nLayers: int = 2

    DataVariable(formatType, 1, "nHeads")
    nHeads: int = 4

    DataVariable(formatType, 1, "dFf")
    dFf: int = 512

    DataVariable(formatType, 1, "dtype")
    dtype: str = "float32"

    DataVariable(formatType, 1, "modelSeed")
    modelSeed: int = 0

    DataVariable(formatType, 1, "epochs")
    epochs: int = 1

    DataVariable(formatType, 1, "lr")
    lr: float = 3e-4

    DataVariable(formatType, 1, "batchSize")
    batchSize: int = 8

    DataVariable(formatType, 1, "maxSteps")
    maxSteps: int = 0

    DataVariable(formatType, 1, "maxInstances")
    maxInstances: int = 0

    DataVariable(formatType, 1, "maxNew")
    maxNew: int = 256

    # evaluation and ablation
    DataVariable(formatType, 1, "leadTime")
    leadTime: int = 0

    DataVariable(formatType, 1, "ablationAxes")
    ablationAxes: List[str] = ["table"]

    DataVariable(formatType, 1, "ablationSeeds")
    ablationSeeds: List[int] = [0]

    DataVariable(formatType, 1, "workers")
    workers: int = 0

    def __init__(self, values: Optional[Dict[str, Any]] = None):
        for name in self.varNames():
            default = getattr(type(self), name, None)
            if isinstance(default, list):
                setattr(self, name, list(default))
        if values:
            self.setValues(values)

    def validate(self) -> "RunConfig":
        if self.tracks < 3:
            raise ConfigError(f"tracks must be at least 3, got {self.tracks}")
        if self.history <= 0 or self.horizon <= 0:
            raise ConfigError("history and horizon must be positive")
        if self.length < self.history + self.horizon:
            raise ConfigError(f"length {self.length} is shorter than history + horizon = "
                              f"{self.history + self.horizon}")
        if len(self.splitRatios) != 3 or abs(sum(self.splitRatios) - 1.0) > 1e-9:
            raise ConfigError(f"splitRatios must be three values summing to 1, got {self.splitRatios}")
        if len(self.wavelengths) != 4:
            raise ConfigError(f"wavelengths needs 4 values (day, hour, lat, lng), got {self.wavelengths}")
        if self.epochs <= 0 or self.lr <= 0 or self.batchSize <= 0:
            raise ConfigError("epochs, lr and batchSize must be positive")
        if not 0 <= self.leadTime <= self.horizon:
            raise ConfigError(f"leadTime {self.leadTime} outside 0..{self.horizon}")
        IndexingScheme.parse(self.scheme)
        self.modelConfig()
        self.simParams()
        return self

    def imageSpec(self) -> ImageSpec:
        try:
            return ImageSpec(self.imagePx, self.patchPx, self.kmPerPx)
        except ValueError as e:
            raise ConfigError(str(e))

    def simParams(self, seed: Optional[int] = None) -> SimParams:
        try:
            return SimParams(seed=self.seed if seed is None else seed, recurve_lat=self.recurveLat,
                             beta_drift=self.betaDrift, intensity_cue_gain=self.intensityCueGain,
                             noise_sigma=self.noiseSigma, structure_lag=self.horizon)
        except ValueError as e:
            raise ConfigError(str(e))

    def modelConfig(self) -> ModelConfig:
        headDim = self.dModel // self.nHeads if self.nHeads else 0
        rope = RopeConfig(headDim, self.ropeBase, tuple(self.ropeSections) or None, self.ropeSectionRestart)
        return ModelConfig(vocab_size=len(CharVocabulary()), d_model=self.dModel, n_layers=self.nLayers,
                           n_heads=self.nHeads, d_ff=self.dFf, rope=rope, scheme=self.scheme,
                           use_vision=self.useVision, use_variant_pe=self.useVariantPe,
                           use_standard_pe_only=self.useStandardPeOnly, use_pe=self.usePe, use_rope=self.useRope,
                           negate=self.negate, image=self.imageSpec(), wavelengths=Wavelengths(*self.wavelengths),
                           video=VideoParams(self.tokensPerSecond, self.temporalPatchSize, self.fps),
                           seed=self.modelSeed, dtype=self.dtype)


def _flatten(data: Dict[str, Any]) -> Dict[str, Any]:
    """TOML tables are namespaces only: [model] dModel = 64 is the key dModel."""
    flat = {}
    for key, value in data.items():
        if isinstance(value, dict):
            for inner, innerValue in _flatten(value).items():
                if inner in flat:
                    raise ConfigError(f"key '{inner}' is set twice")
                flat[inner] = innerValue
        else:
            if key in flat:
                raise ConfigError(f"key '{key}' is set twice")
            flat[key] = value
    return flat


def ParseOverrides(pairs: Iterable[str]) -> Dict[str, str]:
    overrides = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override '{pair}' is not of the form key=value")
        overrides[key.strip()] = value.strip()
    return overrides


def LoadRunConfig(path: Optional[str] = None, overrides: Iterable[str] = (),
                  flags: Optional[Dict[str, Any]] = None) -> RunConfig:
    """defaults < config file (.toml or .json) < --set overrides < explicit flags"""
    config = RunConfig()

    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        if path.endswith(".toml"):
            try:
                with open(path, "rb") as file:
                    data = tomllib.load(file)
            except tomllib.TOMLDecodeError as e:
                raise ConfigError(f"{path}: {e}")
            if data.get("formatType", config.formatType) != config.formatType:
                raise ConfigError(f"{path}: expected format '{config.formatType}'")
            config.setValues(_flatten(data))
        elif not config.loadJsonFile(path):
            raise ConfigError(f"{path}: missing formatVersion")

    config.setValues(ParseOverrides(overrides))
    config.setValues({k: v for k, v in (flags or {}).items() if v is not None})
    return config.validate()
