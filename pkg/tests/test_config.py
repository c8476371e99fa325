import pytest

import utils.func as func
from utils.config_updater import ConfigManager
from utils.error_types import ConfigError
from utils.experiment_config import (
    BUILTIN_PRESETS,
    ExperimentConfig,
    deep_merge,
    default_settings,
    load_experiment_config,
)


def test_defaults_without_user_file(tmp_path):
    config = load_experiment_config(str(tmp_path / "missing.yml"))
    assert config.rig == "builtin:desk"
    assert config.spectra.step_nm == 5.0
    assert config.patterns.line_width == 5 and config.patterns.shift == 2
    assert config.correspondence.wavelengths[0] == 430.0
    assert config.evaluation.probes[0] == (8, 8)
    assert config.preset == ""


def test_precedence_file_preset_flags(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text("Simulation:\n  sigma: 0.02\n  depth_mm: 700.0\nOptions:\n  preset: prototype\n",
                    encoding="utf-8")
    config = load_experiment_config(str(path))
    assert config.preset == "prototype"
    assert config.rig == "builtin:prototype"
    assert config.patterns.complementary
    # the preset wins over the file
    assert config.simulation.depth_mm == 1000.0
    assert config.simulation.sigma == 0.02

    flagged = load_experiment_config(str(path), preset="desk", overrides={"Simulation": {"depth_mm": 650.0}})
    assert flagged.rig == "builtin:desk"
    assert flagged.simulation.depth_mm == 650.0


def test_every_preset_resolves(tmp_path):
    for name in BUILTIN_PRESETS:
        config = load_experiment_config(None, preset=name)
        assert config.preset == name


def test_unknown_preset():
    with pytest.raises(ConfigError):
        load_experiment_config(None, preset="nope")


def test_invalid_values_raise_config_error():
    with pytest.raises(ConfigError):
        load_experiment_config(None, overrides={"Simulation": {"sigma": -1.0}})
    with pytest.raises(ConfigError):
        load_experiment_config(None, overrides={"Reconstruction": {"orders": [2]}})
    with pytest.raises(ConfigError):
        load_experiment_config(None, overrides={"Patterns": {"shift": 9}})


def test_unknown_keys_are_ignored(caplog):
    config = load_experiment_config(None, overrides={"Spectra": {"colour": "red"}})
    assert config.spectra.start_nm == 430.0
    assert "colour" in caplog.text


def test_config_round_trips_through_dict():
    config = ExperimentConfig.from_dict(default_settings())
    assert ExperimentConfig.from_dict(config.to_dict()) == config
    changed = config.with_overrides({"Options": {"seed": 9}})
    assert changed.seed == 9
    assert changed.spectra == config.spectra


def test_deep_merge_keeps_siblings():
    base = {"A": {"x": 1, "y": 2}, "B": 3}
    assert deep_merge(base, {"A": {"y": 5}}) == {"A": {"x": 1, "y": 5}, "B": 3}


def test_malformed_yaml(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text("Paths: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        func.load_config(str(path))


def test_config_manager_creates_missing_file(tmp_path):
    path = tmp_path / "config.yml"
    manager = ConfigManager(str(path))
    assert manager.check_and_update()
    assert path.exists()
    assert func.load_config(str(path))["Paths"]["rig"] == "builtin:desk"
    assert not ConfigManager(str(path)).check_and_update()


def test_config_manager_upgrades_outdated_file(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text('version: "0.9.0"\nPaths:\n  output_dir: "results"\n  stale: 1\n', encoding="utf-8")
    assert ConfigManager(str(path)).check_and_update()
    data = func.load_config(str(path))
    assert data["version"] == "1.0.0"
    assert data["Paths"]["output_dir"] == "results"
    assert "stale" not in data["Paths"]
    assert data["Spectra"]["end_nm"] == 660.0


def test_thread_count_respects_environment(monkeypatch):
    monkeypatch.setenv("DSL_THREADS", "1")
    assert func.get_thread_count({"Options": {"threads": 8}}) == 1
    monkeypatch.setenv("DSL_THREADS", "abc")
    assert func.get_thread_count({"Options": {"threads": 3}}) == 3


def test_config_upgrade_drops_unknown_keys_and_presets(tmp_path, caplog):
    path = tmp_path / "config.yml"
    path.write_text('version: "0.9.0"\nLegacy:\n  gpu: true\nSpectra: 5\n'
                    'Options:\n  preset: "laptop"  # old name\n  seed: 3\n', encoding="utf-8")
    manager = ConfigManager(str(path))
    assert manager.check_and_update()
    assert sorted(manager.dropped) == ["Legacy"]
    assert "Legacy" in caplog.text and "laptop" in caplog.text

    data = func.load_config(str(path))
    assert "Legacy" not in data
    assert data["Spectra"]["step_nm"] == 5.0
    assert data["Options"]["preset"] == ""
    assert data["Options"]["seed"] == 3
    assert load_experiment_config(str(path)).seed == 3


def test_config_upgrade_keeps_known_preset(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text("Options:\n  preset: desk\n", encoding="utf-8")
    assert ConfigManager(str(path)).check_and_update()
    assert func.load_config(str(path))["Options"]["preset"] == "desk"
