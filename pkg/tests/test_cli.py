import os

import pytest

import commands
from app import build_parser, main
from commands.common import overrides_from_args
from utils.error_types import (
    ConfigError,
    DependencyError,
    ParseError,
    UndefinedMetricError,
    create_error_response,
)
from utils.persistence import read_json

SMALL_CONFIG = """\
Spectra:
  step_nm: 10.0
Correspondence:
  lattice_rows: 8
  lattice_cols: 8
Simulation:
  resolution: [16, 16]
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("DSL_THREADS", "1")
    (tmp_path / "config.yml").write_text(SMALL_CONFIG, encoding="utf-8")
    return tmp_path


def test_registry_lists_commands_in_help_order():
    assert commands.get_registry().list_commands() == [
        "simulate", "fit-correspondence", "calibrate", "reconstruct-depth",
        "reconstruct-hyper", "evaluate", "noise-sweep",
    ]
    metadata = commands.get_registry().get_metadata("simulate")
    assert "binary/stack.json" in metadata.artifacts
    with pytest.raises(ValueError):
        commands.get_registry().get_handler("train")


def test_common_flags_become_overrides():
    args = build_parser().parse_args(["noise-sweep", "--sigma", "0.01", "0.02", "--seed", "4",
                                      "--orders", "-1", "--tau", "0.4"])
    assert overrides_from_args(args) == {
        "Options": {"seed": 4},
        "Simulation": {"sigma": 0.01},
        "Evaluation": {"sigmas": [0.01, 0.02]},
        "Reconstruction": {"tau": 0.4, "orders": [-1]},
    }


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_exit_codes_follow_error_category():
    assert create_error_response(ConfigError("x")).exit_code == 2
    assert create_error_response(ParseError("x", "f", 3)).exit_code == 3
    assert create_error_response(DependencyError("x")).exit_code == 4
    assert create_error_response(UndefinedMetricError("x")).exit_code == 8
    assert create_error_response(FileNotFoundError("x")).exit_code == 4
    assert create_error_response(RuntimeError("x")).exit_code == 1


def test_missing_input_exits_with_dependency_code(workdir, capsys):
    assert main(["reconstruct-depth", "--binary", "absent/stack.json"]) == 4
    assert "required artifact" in capsys.readouterr().err


def test_unknown_preset_exits_with_config_code(workdir):
    assert main(["simulate", "--preset", "nope"]) == 2


def test_first_run_upgrades_config_file(workdir):
    main(["reconstruct-depth", "--binary", "absent/stack.json"])
    text = (workdir / "config.yml").read_text(encoding="utf-8")
    assert text.startswith("version:")
    assert "lattice_rows: 8" in text


@pytest.mark.slow
def test_simulate_then_decode_depth(workdir):
    assert main(["simulate", "--scene", "colorchecker"]) == 0
    sim_dir = workdir / "out" / "simulate"
    metrics = read_json(str(sim_dir / "metrics.json"))
    assert metrics["K_b"] == 19
    assert metrics["K_s"] == 318
    assert metrics["frames"]["total"] == 21 + 318
    manifest = read_json(str(sim_dir / "manifest.json"))
    assert manifest["command"] == "simulate"
    for artifact in manifest["artifacts"]:
        assert os.path.exists(sim_dir / artifact)

    assert main(["reconstruct-depth", "--binary", str(sim_dir / "binary" / "stack.json"),
                 "--truth", str(sim_dir / "scene" / "scene.json")]) == 0
    depth_metrics = read_json(str(workdir / "out" / "reconstruct-depth" / "metrics.json"))
    assert depth_metrics["pixels"] == 256
    assert depth_metrics["valid"] > 200
