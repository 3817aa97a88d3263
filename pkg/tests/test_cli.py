import hashlib
import json
import logging
import os

import numpy as np
import pandas as pd
import pytest

from core.cli import main

TINY = ["--set", "imagePx=32", "--set", "patchPx=16", "--set", "kmPerPx=40", "--set", "history=3",
        "--set", "horizon=3", "--set", "dModel=32", "--set", "nHeads=2", "--set", "nLayers=1", "--set", "dFf=64",
        "--set", "maxNew=10", "--set", "batchSize=4"]


@pytest.fixture(autouse=True)
def restore_logger():
    logger = logging.getLogger("pipecore")
    handlers, level, propagate = logger.handlers[:], logger.level, logger.propagate
    yield
    logger.handlers[:] = handlers
    logger.setLevel(level)
    logger.propagate = propagate


def run(capsys, *argv):
    code = main(list(argv) + TINY)
    captured = capsys.readouterr()
    return code, json.loads(captured.out) if code == 0 else captured.err


@pytest.fixture
def dataset(tmp_path, capsys):
    out = str(tmp_path / "data")
    code, result = run(capsys, "gen-data", "--seed", "0", "--tracks", "10", "--length", "8", "--out", out, "-q")
    assert code == 0, result
    return out


def test_gen_data_layout(dataset):
    assert sorted(os.listdir(dataset)) == ["images", "resolved_config.json", "split.json", "tracks.csv"]
    split = json.load(open(os.path.join(dataset, "split.json"), encoding="utf-8"))
    assert [len(split[name]) for name in ("train", "val", "test")] == [7, 1, 2]
    with open(os.path.join(dataset, "tracks.csv"), "rb") as file:
        assert split["tracksSha256"] == hashlib.sha256(file.read()).hexdigest()
    frame = pd.read_csv(os.path.join(dataset, "tracks.csv"))
    assert len(frame) == 80
    assert sorted(os.listdir(os.path.join(dataset, "images", split["test"][0]))) == [f"{i:05d}.pgm" for i in range(8)]


def test_gen_data_is_reproducible(dataset, tmp_path, capsys):
    again = str(tmp_path / "again")
    code, _ = run(capsys, "gen-data", "--seed", "0", "--tracks", "10", "--length", "8", "--out", again, "-q")
    assert code == 0
    for name in ("tracks.csv", "split.json", os.path.join("images", "SYN00000003", "00005.pgm")):
        with open(os.path.join(dataset, name), "rb") as a, open(os.path.join(again, name), "rb") as b:
            assert a.read() == b.read()


def test_gen_data_rejects_short_tracks(tmp_path, capsys):
    out = tmp_path / "short"
    code, err = run(capsys, "gen-data", "--tracks", "10", "--length", "5", "--out", str(out))
    assert code == 2
    assert err.startswith("error: ConfigError: length 5")
    assert not out.exists()


def test_bad_config_values(tmp_path, capsys):
    code, err = run(capsys, "gen-data", "--set", "colour=red", "--out", str(tmp_path))
    assert code == 2
    assert "unknown configuration key 'colour'" in err
    missing = str(tmp_path / "nothing.toml")
    code, err = run(capsys, "gen-data", "--config", missing, "--out", str(tmp_path))
    assert code == 2


def test_missing_dataset_is_a_data_error(tmp_path, capsys):
    code, err = run(capsys, "train", "--data", str(tmp_path / "nowhere"), "--out", str(tmp_path), "-q")
    assert code == 3
    assert "DataError" in err


def test_unwritable_output_is_a_data_error(tmp_path, capsys):
    taken = tmp_path / "taken"
    taken.write_text("not a folder", encoding="utf-8")
    code, err = run(capsys, "gen-data", "--tracks", "10", "--length", "8", "--out", str(taken), "-q")
    assert code == 3
    assert "taken" in err and "Error: " in err


def grid(folder):
    return pd.read_csv(os.path.join(folder, "position_grid.csv"))


def test_encode_dump_physics(dataset, tmp_path, capsys):
    out = str(tmp_path / "physics")
    code, result = run(capsys, "encode-dump", "--data", dataset, "--scheme", "physics", "--out", out, "-q")
    assert code == 0
    assert result["visionTokens"] == 3 * 4
    frame = grid(out)
    axes = frame[["temporal", "height", "width"]].to_numpy()
    vision = (frame["kind"] == "vision").to_numpy()
    assert np.all(axes[vision] < 0)
    text = axes[~vision]
    np.testing.assert_array_equal(text, np.repeat(np.arange(len(text))[:, None], 3, axis=1))
    pe = pd.read_csv(os.path.join(out, "pe_matrix.csv"))
    assert pe.shape == (len(frame), 2 + 32)


def test_encode_dump_text_only_sequential(dataset, tmp_path, capsys):
    out = str(tmp_path / "seq")
    code, result = run(capsys, "encode-dump", "--data", dataset, "--scheme", "sequential", "--text-only",
                       "--instance", "2", "--out", out, "-q")
    assert code == 0
    assert result["visionTokens"] == 0
    frame = grid(out)
    for axis in ("temporal", "height", "width"):
        np.testing.assert_array_equal(frame[axis], frame["index"])


def test_encode_dump_schemes_share_text_only_grid(dataset, tmp_path, capsys):
    grids = []
    for scheme in ("sequential", "three_d", "physics"):
        out = str(tmp_path / scheme)
        code, _ = run(capsys, "encode-dump", "--data", dataset, "--scheme", scheme, "--text-only", "--out", out, "-q")
        assert code == 0
        grids.append(grid(out))
    pd.testing.assert_frame_equal(grids[0], grids[1])
    pd.testing.assert_frame_equal(grids[0], grids[2])


def test_encode_dump_instance_out_of_range(dataset, tmp_path, capsys):
    code, err = run(capsys, "encode-dump", "--data", dataset, "--instance", "999", "--out", str(tmp_path), "-q")
    assert code == 2
    assert "instance 999" in err


def test_oracle_forecasts_score_zero(dataset, tmp_path, capsys):
    forecastOut, evalOut = str(tmp_path / "forecast"), str(tmp_path / "eval")
    code, result = run(capsys, "forecast", "--data", dataset, "--oracle", "--out", forecastOut, "-q")
    assert code == 0
    assert result["instances"] == 2 * 3
    assert result["parseFailures"] == 0

    code, result = run(capsys, "eval", "--forecasts", result["forecasts"], "--out", evalOut, "-q")
    assert code == 0
    metrics = result["metrics"]
    assert metrics["instanceCount"] == 6
    for values in metrics["variables"].values():
        assert values["mae"] == 0.0
        assert values["rmse"] == 0.0
    assert metrics["distance"]["maeKm"] == pytest.approx(0.0, abs=1e-9)
    regression = pd.read_csv(os.path.join(evalOut, "regression.csv"))
    assert len(regression) == 6 * 3 * 3


def test_forecast_needs_checkpoint(dataset, tmp_path, capsys):
    code, err = run(capsys, "forecast", "--data", dataset, "--out", str(tmp_path), "-q")
    assert code == 2
    assert "--checkpoint" in err


def test_train_then_forecast(dataset, tmp_path, capsys):
    trainOut, forecastOut = str(tmp_path / "train"), str(tmp_path / "forecast")
    code, result = run(capsys, "train", "--data", dataset, "--max-steps", "2", "--out", trainOut, "-q")
    assert code == 0
    assert result["steps"] == 2
    assert np.isfinite(result["finalLoss"])
    trace = pd.read_csv(os.path.join(trainOut, "loss_trace.csv"))
    assert list(trace.columns) == ["step", "loss"]

    code, result = run(capsys, "forecast", "--data", dataset, "--checkpoint", result["checkpoint"],
                       "--split", "val", "--out", forecastOut, "-q")
    assert code == 0
    assert result["instances"] == 3
    document = json.load(open(result["forecasts"], encoding="utf-8"))
    assert document["split"] == "val"
    assert len(document["records"]) == 3


def test_resolved_config_replays(dataset, tmp_path, capsys):
    out = str(tmp_path / "replay")
    code, _ = run(capsys, "gen-data", "--config", os.path.join(dataset, "resolved_config.json"), "--out", out, "-q")
    assert code == 0
    with open(os.path.join(dataset, "tracks.csv"), "rb") as a, open(os.path.join(out, "tracks.csv"), "rb") as b:
        assert a.read() == b.read()


def test_ablate_scheme_axis(dataset, tmp_path, capsys):
    out = str(tmp_path / "ablate")
    code, result = run(capsys, "ablate", "--data", dataset, "--axes", "scheme", "--workers", "1",
                       "--set", "maxSteps=1", "--set", "maxInstances=2", "--out", out, "-q")
    assert code == 0
    assert result["rows"] == 3
    frame = pd.read_csv(result["ablation"])
    assert list(frame["scheme"]) == ["sequential", "three_d", "physics"]


@pytest.mark.slow
def test_worker_process(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PIPE_OUTPUT_DIR", str(tmp_path))
    out = str(tmp_path / "data")
    code, result = run(capsys, "gen-data", "--tracks", "3", "--length", "6", "--worker", "--out", out, "-q")
    assert code == 0
    assert result["split"] == [2, 0, 1]
