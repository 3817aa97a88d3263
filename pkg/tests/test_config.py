import json

import pytest

from core.worker.config import LoadRunConfig, ParseOverrides, RunConfig
from core.worker.exceptions import ConfigError
from core.worker.indexing import IndexingScheme


def test_defaults_are_valid():
    config = LoadRunConfig()
    assert (config.tracks, config.length, config.history, config.horizon) == (10, 48, 12, 12)
    assert config.splitRatios == [0.7, 0.15, 0.15]
    cfg = config.modelConfig()
    assert cfg.scheme is IndexingScheme.PHYSICS
    assert cfg.rope.head_dim == 32
    assert cfg.wavelengths.p_lng == 360.0


def test_list_defaults_are_not_shared():
    a, b = RunConfig(), RunConfig()
    a.ablationSeeds.append(3)
    assert b.ablationSeeds == [0]


def test_precedence(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('seed = 1\ntracks = 20\n\n[model]\ndModel = 64\nnHeads = 2\n', encoding="utf-8")
    config = LoadRunConfig(str(path), ["tracks=30", "epochs=2"], {"tracks": 40, "lr": None})
    assert config.seed == 1
    assert config.dModel == 64
    assert config.epochs == 2
    assert config.tracks == 40
    assert config.lr == pytest.approx(3e-4)


def test_override_strings_are_coerced():
    config = LoadRunConfig(overrides=["negate=false", "ablationSeeds=0,1,2", "ablationAxes=scheme,pe",
                                      "wavelengths=366,24,180,360", "kmPerPx=20"])
    assert config.negate is False
    assert config.ablationSeeds == [0, 1, 2]
    assert config.ablationAxes == ["scheme", "pe"]
    assert config.wavelengths == [366.0, 24.0, 180.0, 360.0]
    assert config.kmPerPx == 20.0


@pytest.mark.parametrize("overrides, match", [
    (["colour=red"], "unknown configuration key"),
    (["tracks=many"], "invalid value"),
    (["negate=perhaps"], "invalid value"),
    (["length=20"], "shorter than history"),
    (["tracks=2"], "at least 3"),
    (["splitRatios=0.5,0.5"], "splitRatios"),
    (["wavelengths=1,2,3"], "wavelengths"),
    (["scheme=spiral"], "unknown indexing scheme"),
    (["dModel=60"], "head_dim"),
    (["leadTime=13"], "leadTime"),
    (["patchPx=30"], "divisible"),
    (["tracks"], "key=value"),
])
def test_invalid_configs(overrides, match):
    with pytest.raises(ConfigError, match=match):
        LoadRunConfig(overrides=overrides)


def test_toml_tables_are_namespaces_only(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('[data]\nseed = 3\n\n[model]\nseed = 4\n', encoding="utf-8")
    with pytest.raises(ConfigError, match="set twice"):
        LoadRunConfig(str(path))


def test_toml_errors(tmp_path):
    broken = tmp_path / "broken.toml"
    broken.write_text("seed = = 1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        LoadRunConfig(str(broken))

    foreign = tmp_path / "foreign.toml"
    foreign.write_text('formatType = "pipe_metrics"\n', encoding="utf-8")
    with pytest.raises(ConfigError, match="expected format"):
        LoadRunConfig(str(foreign))

    with pytest.raises(ConfigError, match="not found"):
        LoadRunConfig(str(tmp_path / "missing.toml"))


def test_resolved_config_reproduces_run(tmp_path):
    config = LoadRunConfig(overrides=["seed=5", "scheme=three_d", "ablationSeeds=1,2"])
    path = tmp_path / "resolved_config.json"
    config.saveJsonFile(str(path))
    assert json.loads(path.read_text(encoding="utf-8"))["formatType"] == "pipe_run"
    assert LoadRunConfig(str(path)).getDict() == config.getDict()


def test_json_config_needs_version(tmp_path):
    path = tmp_path / "run.json"
    path.write_text('{"seed": 3}', encoding="utf-8")
    with pytest.raises(ConfigError, match="formatVersion"):
        LoadRunConfig(str(path))
    path.write_text('{"formatType": "pipe_run", "formatVersion": 9}', encoding="utf-8")
    with pytest.raises(ConfigError, match="newer"):
        LoadRunConfig(str(path))


def test_parse_overrides():
    assert ParseOverrides(["a=1", " b = two "]) == {"a": "1", "b": "two"}
    assert ParseOverrides(["expr=x=y"]) == {"expr": "x=y"}
    with pytest.raises(ConfigError):
        ParseOverrides(["=1"])


def test_model_config_follows_run_config():
    config = LoadRunConfig(overrides=["dModel=64", "nHeads=2", "ropeSections=10,3,3", "useVariantPe=false",
                                      "useStandardPeOnly=true", "imagePx=56", "patchPx=28"])
    cfg = config.modelConfig()
    assert cfg.rope.sections == (10, 3, 3)
    assert cfg.pe_mode.value == "standard"
    assert (cfg.image.n_row, cfg.image.n_col) == (2, 2)
    assert config.simParams(seed=9).seed == 9
    assert LoadRunConfig(overrides=["useVariantPe=false"]).modelConfig().pe_mode.value == "standard"
    assert LoadRunConfig(overrides=["usePe=false"]).modelConfig().pe_mode.value == "none"
