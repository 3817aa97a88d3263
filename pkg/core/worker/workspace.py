import json
import os
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .ablation import TrainSettings, forecast_all, run_ablation
from .basedispatch import SendNotification
from .config import RunConfig
from .data import (ForecastInstance, TyphoonTrack, build_prompt, load_csv, parse_forecast, render_track_images,
                   save_csv, split_dataset, synth_track, window_instances)
from .evaluate import evaluate, regression_dump, truth_arrays
from .exceptions import ConfigError, DataError, ForecastParseError
from .indexing import IndexingScheme
from .model import (CharVocabulary, encode_instance, encode_sequence, load_checkpoint, save_checkpoint, tokenize,
                    train)
from .variables import (ABLATION_FILE, CHECKPOINT_FILE, CORE_VERSION, DATA_FORMAT_CHECKPOINT,
                        DATA_FORMAT_CHECKPOINT_VERSION, DATA_FORMAT_FORECASTS, DATA_FORMAT_FORECASTS_VERSION,
                        DATA_FORMAT_SPLIT, DATA_FORMAT_SPLIT_VERSION, FORECASTS_FILE, IMAGES_FOLDER, LOSS_TRACE_FILE,
                        METRICS_FILE, PE_MATRIX_FILE, POSITION_GRID_FILE, PROMPT_LABEL_SEPARATOR, REGRESSION_FILE,
                        RESOLVED_CONFIG_FILE, SPLIT_MANIFEST_FILE, TRACKS_CSV_FILE, CheckExists, GetOutputPath)
from .vartypes import ForecastRecordTyped, ForecastsTyped, SplitManifestTyped
from ..notifications import NotificationType
from ..tools.images import LoadSidecar, LoadTrackImages, SaveSidecar, SaveTrackImages
from ..utils.hash import HashFile

SPLIT_NAMES = ("train", "val", "test")


def _writeJson(path: str, data):
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        json.dump(data, file, indent=4)


def _readJson(path: str) -> dict:
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    with open(path, "r", encoding="utf-8") as file:
        try:
            return json.load(file)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: invalid JSON ({e})")


class DatasetFolder:
    """tracks.csv + images/<sequence_id>/NNNNN.pgm + split.json as written by gen-data."""

    def __init__(self, path: str):
        self.path = path
        self.tracksPath = os.path.join(path, TRACKS_CSV_FILE)
        self.imagesPath = os.path.join(path, IMAGES_FOLDER)
        self.splitPath = os.path.join(path, SPLIT_MANIFEST_FILE)
        self._tracks: Optional[List[TyphoonTrack]] = None
        self._images: Dict[str, np.ndarray] = {}

    def tracks(self) -> List[TyphoonTrack]:
        if self._tracks is None:
            if not os.path.exists(self.tracksPath):
                raise DataError(f"tracks file not found: {self.tracksPath}")
            SendNotification(NotificationType.LoadingTracks, self.tracksPath)
            self._tracks = load_csv(self.tracksPath)
        return self._tracks

    def split(self) -> SplitManifestTyped:
        manifest = _readJson(self.splitPath)
        if manifest.get("formatType") != DATA_FORMAT_SPLIT or manifest.get("formatVersion", 0) > DATA_FORMAT_SPLIT_VERSION:
            raise DataError(f"{self.splitPath} is not a supported split manifest")
        if manifest.get("tracksSha256") != HashFile(self.tracksPath):
            SendNotification(NotificationType.Warning, f"{self.tracksPath} changed since the split was written")
        return manifest

    def images(self, track: TyphoonTrack, patch_px: int) -> np.ndarray:
        if track.sequence_id not in self._images:
            spec = LoadSidecar(self.imagesPath, patch_px)
            SendNotification(NotificationType.LoadingImages, track.sequence_id, len(track))
            self._images[track.sequence_id] = LoadTrackImages(os.path.join(self.imagesPath, track.sequence_id),
                                                              len(track), spec)
        return self._images[track.sequence_id]

    def instances(self, config: RunConfig, split: Optional[str] = None) -> List[ForecastInstance]:
        tracks = self.tracks()
        if split is not None:
            if split not in SPLIT_NAMES:
                raise ConfigError(f"unknown split '{split}'; choose from {', '.join(SPLIT_NAMES)}")
            wanted = set(self.split()[split])
            tracks = [t for t in tracks if t.sequence_id in wanted]

        instances = []
        for track in tracks:
            instances.extend(window_instances(track, self.images(track, config.patchPx), config.history,
                                              config.horizon))
        if config.maxInstances:
            instances = instances[:config.maxInstances]
        return instances


class WorkspaceClass:
    def __init__(self):
        self.outputPath: Optional[str] = None
        self.datasets: Dict[str, DatasetFolder] = {}

    def setOutputPath(self, path: Optional[str]):
        self.outputPath = path

    def getOutputPath(self, override: Optional[str] = None) -> str:
        path = GetOutputPath(override or self.outputPath)
        CheckExists(path, True)
        return path

    def dataset(self, path: str) -> DatasetFolder:
        path = os.path.abspath(path)
        if path not in self.datasets:
            self.datasets[path] = DatasetFolder(path)
        return self.datasets[path]

    def clear(self):
        self.datasets = {}

    def writeResolvedConfig(self, config: RunConfig, out: str) -> str:
        path = os.path.join(out, RESOLVED_CONFIG_FILE)
        config.saveJsonFile(path)
        SendNotification(NotificationType.ConfigResolved, path)
        return path

    def getWorkspaceData(self) -> dict:
        out = GetOutputPath(self.outputPath)
        files = sorted(os.listdir(out)) if os.path.isdir(out) else []
        return {"coreVersion": CORE_VERSION, "outputPath": out, "files": files,
                "datasets": sorted(self.datasets)}

    def genData(self, config: RunConfig, out: Optional[str] = None) -> dict:
        config.validate()
        spec = config.imageSpec()
        tracks, images = [], []
        for index in range(config.tracks):
            params = config.simParams(seed=config.seed * 100003 + index)
            sequenceId = f"SYN{config.seed:04d}{index:04d}"
            SendNotification(NotificationType.GeneratingTrack, sequenceId, index + 1, config.tracks)
            track = synth_track(params, config.length, config.history, config.horizon, sequence_id=sequenceId)
            tracks.append(track)
            images.append(render_track_images(track, spec, seed=params.seed, noise=config.imageNoise))

        train_, val, test = split_dataset(tracks, tuple(config.splitRatios), seed=config.seed)

        out = self.getOutputPath(out)
        tracksPath = os.path.join(out, TRACKS_CSV_FILE)
        SendNotification(NotificationType.WritingTracks, tracksPath, len(tracks))
        save_csv(tracks, tracksPath)

        imagesPath = os.path.join(out, IMAGES_FOLDER)
        CheckExists(imagesPath, True)
        SaveSidecar(imagesPath, spec)
        for track, trackImages in zip(tracks, images):
            SendNotification(NotificationType.WritingImages, track.sequence_id, len(trackImages))
            SaveTrackImages(os.path.join(imagesPath, track.sequence_id), trackImages)

        manifest: SplitManifestTyped = {"formatType": DATA_FORMAT_SPLIT, "formatVersion": DATA_FORMAT_SPLIT_VERSION,
                                        "seed": config.seed, "tracksSha256": HashFile(tracksPath),
                                        "train": [t.sequence_id for t in train_],
                                        "val": [t.sequence_id for t in val],
                                        "test": [t.sequence_id for t in test]}
        splitPath = os.path.join(out, SPLIT_MANIFEST_FILE)
        _writeJson(splitPath, manifest)
        SendNotification(NotificationType.SplitWritten, splitPath, len(train_), len(val), len(test))

        self.datasets.pop(os.path.abspath(out), None)
        self.writeResolvedConfig(config, out)
        return {"out": out, "tracks": len(tracks), "split": [len(train_), len(val), len(test)],
                "tracksSha256": manifest["tracksSha256"]}

    def encodeDump(self, config: RunConfig, data: str, instance: int = 0, textOnly: bool = False,
                   out: Optional[str] = None) -> dict:
        config.validate()
        cfg = config.modelConfig()
        instances = self.dataset(data).instances(_withValues(config, maxInstances=0))
        if not 0 <= instance < len(instances):
            raise ConfigError(f"instance {instance} outside 0..{len(instances) - 1}")
        chosen = instances[instance]
        vocab = CharVocabulary()

        if textOnly:
            prompt, label = build_prompt(chosen)
            ids = [t for t in tokenize(prompt + PROMPT_LABEL_SEPARATOR + label, vocab) if t != vocab.image_id]
            empty = np.zeros((0, cfg.image.image_px, cfg.image.image_px))
            encoded = encode_sequence(ids, [], empty, cfg, vocab)
        else:
            encoded = encode_instance(chosen, cfg, vocab)

        kinds = np.where(encoded.layout.visionMask(), "vision", "text")
        grid = pd.DataFrame({"index": np.arange(encoded.seq_len), "kind": kinds,
                             "temporal": encoded.positions[:, 0], "height": encoded.positions[:, 1],
                             "width": encoded.positions[:, 2]})
        pe = pd.DataFrame(encoded.pe, columns=[f"pe_{i}" for i in range(cfg.d_model)])
        pe.insert(0, "kind", kinds)
        pe.insert(0, "index", np.arange(encoded.seq_len))

        out = self.getOutputPath(out)
        gridPath, pePath = os.path.join(out, POSITION_GRID_FILE), os.path.join(out, PE_MATRIX_FILE)
        grid.to_csv(gridPath, index=False, lineterminator="\n", float_format="%.17g")
        pe.to_csv(pePath, index=False, lineterminator="\n", float_format="%.17g")
        SendNotification(NotificationType.EncodingDumped, gridPath, pePath, encoded.seq_len)
        self.writeResolvedConfig(config, out)
        return {"out": out, "scheme": IndexingScheme.parse(config.scheme).value, "seqLen": encoded.seq_len,
                "visionTokens": int((kinds == "vision").sum())}

    def train(self, config: RunConfig, data: str, out: Optional[str] = None) -> dict:
        config.validate()
        cfg = config.modelConfig()
        vocab = CharVocabulary()
        instances = self.dataset(data).instances(config, "train")

        model, trace = train(instances, cfg, epochs=config.epochs, lr=config.lr, batch_size=config.batchSize,
                             vocab=vocab, max_steps=config.maxSteps or None)

        out = self.getOutputPath(out)
        checkpoint = os.path.join(out, CHECKPOINT_FILE)
        save_checkpoint(model, vocab, checkpoint, DATA_FORMAT_CHECKPOINT, DATA_FORMAT_CHECKPOINT_VERSION)
        SendNotification(NotificationType.CheckpointSaved, checkpoint)
        pd.DataFrame({"step": np.arange(len(trace)), "loss": trace}).to_csv(
            os.path.join(out, LOSS_TRACE_FILE), index=False, lineterminator="\n", float_format="%.9g")
        self.writeResolvedConfig(config, out)
        return {"out": out, "checkpoint": checkpoint, "steps": len(trace), "finalLoss": trace[-1],
                "parameters": model.parameterCount()}

    def forecast(self, config: RunConfig, data: str, checkpoint: Optional[str] = None, split: str = "test",
                 oracle: bool = False, out: Optional[str] = None) -> dict:
        config.validate()
        instances = self.dataset(data).instances(config, split)
        if not instances:
            raise DataError(f"split '{split}' has no forecast instances")

        if oracle:
            texts = [build_prompt(instance)[1] for instance in instances]
        else:
            if checkpoint is None:
                raise ConfigError("forecast needs --checkpoint unless --oracle is given")
            if not os.path.exists(checkpoint):
                raise DataError(f"checkpoint not found: {checkpoint}")
            model, vocab = load_checkpoint(checkpoint, DATA_FORMAT_CHECKPOINT, DATA_FORMAT_CHECKPOINT_VERSION)
            SendNotification(NotificationType.CheckpointLoaded, checkpoint, model.parameterCount())
            texts = [text for text, _ in forecast_all(model, instances, vocab, config.maxNew)]

        records: List[ForecastRecordTyped] = []
        failures = 0
        for index, (instance, text) in enumerate(zip(instances, texts)):
            SendNotification(NotificationType.ForecastInstance, instance.sequence_id, index + 1, len(instances))
            try:
                forecast, error = parse_forecast(text, len(instance.label)), None
            except ForecastParseError as e:
                forecast, error = None, str(e)
                failures += 1
            records.append({"sequenceId": instance.sequence_id, "start": instance.history[0].time.isoformat(),
                            "text": text, "forecast": forecast, "error": error, "truth": truth_arrays(instance)})

        out = self.getOutputPath(out)
        path = os.path.join(out, FORECASTS_FILE)
        document: ForecastsTyped = {"formatType": DATA_FORMAT_FORECASTS, "formatVersion": DATA_FORMAT_FORECASTS_VERSION,
                                    "split": split, "horizon": config.horizon, "oracle": oracle, "records": records}
        _writeJson(path, document)
        SendNotification(NotificationType.ForecastFinished, path, len(records), failures)
        self.writeResolvedConfig(config, out)
        return {"out": out, "forecasts": path, "instances": len(records), "parseFailures": failures}

    def eval(self, config: RunConfig, forecasts: str, out: Optional[str] = None) -> dict:
        config.validate()
        document = _readJson(forecasts)
        if document.get("formatType") != DATA_FORMAT_FORECASTS:
            raise DataError(f"{forecasts} is not a forecasts file")
        records = document["records"]
        horizon = int(document["horizon"])
        predicted = [record["forecast"] for record in records]
        truths = [record["truth"] for record in records]

        report = evaluate(predicted, truths, horizon, lead_time=config.leadTime or None)

        out = self.getOutputPath(out)
        metricsPath = os.path.join(out, METRICS_FILE)
        _writeJson(metricsPath, report.to_dict())
        SendNotification(NotificationType.MetricsWritten, metricsPath)
        regressionPath = os.path.join(out, REGRESSION_FILE)
        regression_dump(predicted, truths, regressionPath, horizon=report.horizon)
        SendNotification(NotificationType.RegressionWritten, regressionPath)
        self.writeResolvedConfig(config, out)
        return {"out": out, "metrics": report.to_dict()}

    def ablate(self, config: RunConfig, data: str, out: Optional[str] = None) -> dict:
        config.validate()
        dataset = self.dataset(data)
        trainSet, testSet = dataset.instances(config, "train"), dataset.instances(config, "test")
        settings = TrainSettings(epochs=config.epochs, lr=config.lr, batch_size=config.batchSize,
                                 max_steps=config.maxSteps or None, max_new=config.maxNew,
                                 lead_time=config.leadTime or None)
        result = run_ablation((trainSet, testSet), config.modelConfig(), config.ablationAxes,
                              seeds=config.ablationSeeds, settings=settings, workers=config.workers or None)

        out = self.getOutputPath(out)
        path = os.path.join(out, ABLATION_FILE)
        frame = result.save(path)
        self.writeResolvedConfig(config, out)
        return {"out": out, "ablation": path, "rows": len(frame),
                "failedCells": int((frame["seeds"] == 0).sum())}


def _withValues(config: RunConfig, **values) -> RunConfig:
    copy = RunConfig(config.getDict())
    copy.setValues(values)
    return copy


Workspace = WorkspaceClass()
