"""Command-line verbs, exit codes, and output contracts."""

import json

import pytest
import yaml

from conftest import small_scenario_data
from vapormem.cli import main


@pytest.fixture()
def scenario_file(tmp_path, bundled_config):
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump(small_scenario_data(bundled_config)),
                    encoding="utf-8")
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_spectrum_verb(scenario_file, tmp_path, capsys):
    out_dir = tmp_path / "spec"
    code, out, _ = run_cli(capsys, "spectrum", "-s", scenario_file,
                           "-o", str(out_dir))
    assert code == 0
    view = json.loads(out)
    assert view["stages_run"] == ["spectrum"]
    assert "peak_od_signal_line" in view["outputs"]["spectrum"]
    assert (out_dir / "spectrum.csv").exists()
    assert (out_dir / "run_record.json").exists()


def test_filters_verb(scenario_file, capsys):
    code, out, _ = run_cli(capsys, "filters", "-s", scenario_file)
    assert code == 0
    view = json.loads(out)
    assert view["stages_run"] == ["filters"]
    assert "passive_transmission" in view["outputs"]["filters"]


def test_memory_verb(scenario_file, capsys):
    code, out, _ = run_cli(capsys, "memory", "-s", scenario_file)
    assert code == 0
    view = json.loads(out)
    assert view["outputs"]["memory"]["eta_internal_total"] > 0


def test_analyze_verb_with_seed(scenario_file, tmp_path, capsys):
    code, out, _ = run_cli(capsys, "analyze", "-s", scenario_file,
                           "-o", str(tmp_path / "ana"), "--seed", "11")
    assert code == 0
    view = json.loads(out)
    assert view["stages_run"] == ["tags", "analysis"]
    assert view["outputs"]["analysis"]["snr"] > 0
    assert view["outputs"]["tags"]["seed_tags"] == 11


def test_run_with_stage_subset(scenario_file, capsys):
    code, out, _ = run_cli(capsys, "run", "-s", scenario_file,
                           "--stages", "spectrum,filters")
    assert code == 0
    view = json.loads(out)
    assert view["stages_run"] == ["spectrum", "filters"]


def test_run_and_export_roundtrip(scenario_file, tmp_path, capsys):
    run_dir = tmp_path / "full"
    code, _, _ = run_cli(capsys, "run", "-s", scenario_file,
                         "-o", str(run_dir))
    assert code == 0
    code, out, _ = run_cli(capsys, "export", "-r", str(run_dir),
                           "-k", "histogram", "-o", str(tmp_path / "exp"))
    assert code == 0
    manifest = json.loads(out)
    assert manifest["kind"] == "histogram"
    assert (tmp_path / "exp" / "histogram.csv").exists()
    code, out, _ = run_cli(capsys, "export", "-r", str(run_dir),
                           "-k", "lifetime", "-o", str(tmp_path / "exp2"))
    assert code == 0
    assert (tmp_path / "exp2" / "lifetime_fit.csv").exists()


def test_invalid_scenario_exits_2(tmp_path, capsys, bundled_config):
    data = small_scenario_data(bundled_config)
    del data["cell"]["temperature_k"]
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    code, _, err = run_cli(capsys, "spectrum", "-s", str(path))
    assert code == 2
    assert "validation error" in err
    assert "temperature_k" in err


def test_missing_scenario_exits_2(tmp_path, capsys):
    code, _, err = run_cli(capsys, "spectrum", "-s",
                           str(tmp_path / "none.yaml"))
    assert code == 2
    assert "not found" in err


def test_bad_stage_name_exits_2(scenario_file, capsys):
    code, _, err = run_cli(capsys, "run", "-s", scenario_file,
                           "--stages", "bogus")
    assert code == 2
    assert "unknown stages" in err


def test_bad_arguments_exit_2(capsys):
    assert main(["no-such-verb"]) == 2
    capsys.readouterr()
    assert main(["export", "-k", "histogram"]) == 2  # --record required
    capsys.readouterr()


def test_export_missing_artifact_exits_2(scenario_file, tmp_path, capsys):
    run_dir = tmp_path / "tagsonly"
    code, _, _ = run_cli(capsys, "tags", "-s", scenario_file,
                         "-o", str(run_dir))
    assert code == 0
    code, _, err = run_cli(capsys, "export", "-r", str(run_dir),
                           "-k", "od-curve")
    assert code == 2
    assert "od-curve artifact" in err


def test_stage_runtime_failure_exits_3(tmp_path, capsys, bundled_config):
    # quiet region overlapping the ROI fails inside the analysis stage
    data = small_scenario_data(bundled_config)
    data["run"]["quiet_region"] = {"start_s": 15.0e-9, "stop_s": 27.0e-9}
    path = tmp_path / "overlap.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    code, out, err = run_cli(capsys, "analyze", "-s", str(path),
                             "-o", str(tmp_path / "fail"))
    assert code == 3
    assert "stage failure" in err
    view = json.loads(out)
    assert view["failures"][0]["stage"] == "analysis"
    assert view["stages_run"] == ["tags"]
    assert (tmp_path / "fail" / "run_record.json").exists()
