"""End-to-end pipeline runs, persistence, determinism, and exports."""

import copy
import json

import numpy as np
import pytest

from conftest import small_scenario_data
from vapormem.pipeline import (PIPELINE_STAGES, PipelineError, RunRecord,
                               export_plots, run_pipeline)
from vapormem.scenario import scenario_from_dict


def small_config(bundled_config, **run_overrides):
    data = small_scenario_data(bundled_config)
    data["run"].update(run_overrides)
    return data


def test_all_stages_complete(small_run):
    assert small_run.stages_run == list(PIPELINE_STAGES)
    assert small_run.failures == []
    assert set(small_run.outputs) == set(PIPELINE_STAGES)


def test_artifacts_written(small_run, tmp_path):
    from pathlib import Path
    run_dir = Path(small_run.run_dir)
    expected = {"spectrum.csv", "retrieved_pulse.csv", "filter_response.csv",
                "tags_signal.csv", "tags_blocked.csv", "histogram.csv",
                "lifetime_series.csv", "run_record.json"}
    assert expected <= {p.name for p in run_dir.iterdir()}
    assert expected - {"run_record.json"} <= set(small_run.sidecars)


def test_memory_stage_outputs(small_run):
    mem = small_run.outputs["memory"]
    assert mem["decay_factor"] == pytest.approx(np.exp(-80.0 / 224.0),
                                                rel=1e-6)
    assert mem["eta_internal_total"] == pytest.approx(0.0151, rel=0.05)
    assert 0 < mem["eta_storage"] < 1
    assert 0 < mem["eta_retrieval"] < 1
    assert mem["eta_internal_total"] == pytest.approx(
        mem["eta_storage"] * mem["eta_retrieval"] * mem["decay_factor"],
        rel=1e-9)


def test_analysis_reproduces_declared_statistics(small_run):
    ana = small_run.outputs["analysis"]
    # declared ROI totals are reproduced up to Poisson statistics at
    # 1/100 scale (roughly 4.5e3 retrieved counts)
    assert ana["snr"] == pytest.approx(7.9, abs=1.5)
    assert ana["eta_e2e"] == pytest.approx(0.0312, abs=0.003)
    assert ana["mu_1"] == pytest.approx(0.0886, abs=0.015)
    assert ana["eta_hbt"] == pytest.approx(0.6999, abs=1e-3)
    assert 0.18 < ana["eta_int_zero_delay"] < 0.28
    fit = ana["lifetime"]
    assert fit["model"] == "exponential"
    assert not fit["failed"]
    lo, hi = fit["timescale_ci95_s"]
    assert lo < 224e-9 < hi


def test_rerun_is_deterministic(small_run, bundled_config, tmp_path):
    cfg = scenario_from_dict(small_config(bundled_config), source="small-run")
    record = run_pipeline(cfg, output_dir=tmp_path / "rerun")
    assert record.determinism_hash == small_run.determinism_hash
    assert record.outputs == small_run.outputs


def test_seed_override_changes_tags_not_memory(small_run, bundled_config,
                                               tmp_path):
    cfg = scenario_from_dict(small_config(bundled_config), source="small-run")
    record = run_pipeline(cfg, output_dir=tmp_path / "seeded",
                          seed_override=7)
    assert record.outputs["memory"] == small_run.outputs["memory"]
    assert record.outputs["spectrum"] == small_run.outputs["spectrum"]
    assert record.outputs["tags"]["n_records_signal"] != \
        small_run.outputs["tags"]["n_records_signal"]
    assert record.determinism_hash != small_run.determinism_hash


def test_record_roundtrip(small_run):
    loaded = RunRecord.load(small_run.run_dir)
    assert loaded.determinism_hash == small_run.determinism_hash
    assert loaded.outputs == small_run.outputs
    text = json.dumps(loaded.to_dict())
    assert "determinism_hash" in text


def test_load_missing_record(tmp_path):
    with pytest.raises(PipelineError, match="no run record"):
        RunRecord.load(tmp_path)


def test_stage_plan_validation(bundled_config):
    cfg = scenario_from_dict(small_config(bundled_config))
    with pytest.raises(PipelineError, match="unknown stages"):
        run_pipeline(cfg, stages=("bogus",))
    with pytest.raises(PipelineError, match="analysis requires the tags"):
        run_pipeline(cfg, stages=("analysis",))
    data = small_config(bundled_config, rates_from="memory")
    cfg_mem = scenario_from_dict(data)
    with pytest.raises(PipelineError, match="rates_from = memory requires"):
        run_pipeline(cfg_mem, stages=("tags",))


def test_partial_failure_preserves_completed_stages(bundled_config, tmp_path):
    # quiet region overlapping the ROI fails the analysis stage at runtime
    data = small_config(bundled_config,
                        quiet_region={"start_s": 15.0e-9, "stop_s": 27.0e-9})
    cfg = scenario_from_dict(data)
    record = run_pipeline(cfg, stages=("tags", "analysis"),
                          output_dir=tmp_path / "partial")
    assert record.stages_run == ["tags"]
    assert len(record.failures) == 1
    assert record.failures[0]["stage"] == "analysis"
    assert "overlaps" in record.failures[0]["error"]
    assert "tags" in record.outputs and "analysis" not in record.outputs
    loaded = RunRecord.load(record.run_dir)
    assert loaded.failures == record.failures


def test_export_histogram(small_run, tmp_path):
    manifest = export_plots(small_run, "histogram", tmp_path / "exp")
    assert manifest["kind"] == "histogram"
    assert (tmp_path / "exp" / "histogram.csv").exists()
    assert (tmp_path / "exp" / "export_manifest.json").exists()
    header = (tmp_path / "exp" / "histogram.csv").read_text().splitlines()[0]
    assert header == "time_s,signal_counts,blocked_counts"


def test_export_lifetime(small_run, tmp_path):
    manifest = export_plots(small_run, "lifetime", tmp_path / "exp")
    assert manifest["fit"]["model"] == "exponential"
    lo, hi = manifest["fit"]["timescale_ci95_s"]
    assert lo < 224e-9 < hi
    fit_csv = (tmp_path / "exp" / "lifetime_fit.csv").read_text().splitlines()
    assert fit_csv[0] == "hold_time_s,fit_efficiency,ci95_low,ci95_high"
    assert len(fit_csv) == 202
    rows = np.array([[float(x) for x in row.split(",")]
                     for row in fit_csv[1:]])
    assert np.all(rows[:, 2] <= rows[:, 1] + 1e-15)
    assert np.all(rows[:, 1] <= rows[:, 3] + 1e-15)


def test_export_od_curve_roundtrip(bundled_config, tmp_path):
    data = small_config(bundled_config)
    cfg = scenario_from_dict(data)
    record = run_pipeline(cfg, stages=("tags",), output_dir=tmp_path / "od")
    with pytest.raises(PipelineError, match="od-curve artifact"):
        export_plots(record, "od-curve")
    (tmp_path / "od" / "od_curve.csv").write_text(
        "optical_depth,efficiency,iterations,converged\n2.0,0.01,5,True\n",
        encoding="utf-8")
    manifest = export_plots(record, "od-curve", tmp_path / "od" / "exp")
    assert manifest["files"][0]["file"] == "od_curve.csv"
    assert (tmp_path / "od" / "exp" / "od_curve.csv").exists()


def test_export_validation(small_run, bundled_config, tmp_path):
    with pytest.raises(PipelineError, match="unknown export kind"):
        export_plots(small_run, "scatter")
    cfg = scenario_from_dict(small_config(bundled_config))
    unsaved = run_pipeline(cfg, stages=("tags",))
    with pytest.raises(PipelineError, match="not persisted"):
        export_plots(unsaved, "histogram")
    saved = run_pipeline(cfg, stages=("tags",), output_dir=tmp_path / "t")
    with pytest.raises(PipelineError, match="histogram artifact"):
        export_plots(saved, "histogram")
    with pytest.raises(PipelineError, match="lifetime artifact"):
        export_plots(saved, "lifetime")


def test_binary_tags_option(bundled_config, tmp_path):
    cfg = scenario_from_dict(small_config(bundled_config))
    record = run_pipeline(cfg, stages=("tags",), output_dir=tmp_path / "bin",
                          write_binary_tags=True)
    assert (tmp_path / "bin" / "tags_signal.bin").exists()
    assert (tmp_path / "bin" / "tags_blocked.bin").exists()
    size = (tmp_path / "bin" / "tags_signal.bin").stat().st_size
    assert size == 16 * record.outputs["tags"]["n_records_signal"]
