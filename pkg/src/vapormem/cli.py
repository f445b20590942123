"""Command-line entry points for scenario-driven runs.

Verbs map to pipeline stages plus orchestration:

    spectrum   absorption spectrum and level structure for a scenario
    memory     storage/retrieval solve at the scenario operating point
    filters    filter-stack transmission and suppression budget
    tags       synthetic detection records
    analyze    histogramming and figures of merit (runs tags first)
    run        full pipeline (or --stages subset)
    export     plot-ready CSV bundle from a persisted run

Exit codes: 0 success, 2 validation error (scenario, arguments, missing
artifacts), 3 numerical failure inside a solver or fit.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .pipeline import PIPELINE_STAGES, PipelineError, RunRecord, \
    export_plots, run_pipeline
from .scenario import ScenarioError, bundled_scenario_path, load_scenario

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_VERB_STAGES = {
    "spectrum": ("spectrum",),
    "memory": ("memory",),
    "filters": ("filters",),
    "tags": ("tags",),
    "analyze": ("tags", "analysis"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vapormem",
        description="Warm-vapor lambda-memory simulator and analysis toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", "-s", default=None,
                        help="scenario YAML path (default: bundled "
                             "paper-operating-point)")
    common.add_argument("--output-dir", "-o", default=None,
                        help="directory for the run record and sidecars")
    common.add_argument("--seed", type=int, default=None,
                        help="override the scenario's random seeds")

    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in _VERB_STAGES:
        sub.add_parser(verb, parents=[common],
                       help=f"run the {verb} stage(s)")
    p_run = sub.add_parser("run", parents=[common], help="run the pipeline")
    p_run.add_argument("--stages", default=None,
                       help="comma-separated subset of "
                            f"{','.join(PIPELINE_STAGES)}")
    p_export = sub.add_parser("export", help="export plot-ready CSVs")
    p_export.add_argument("--record", "-r", required=True,
                          help="run directory or run_record.json path")
    p_export.add_argument("--kind", "-k", required=True,
                          choices=["histogram", "lifetime", "od-curve"])
    p_export.add_argument("--output-dir", "-o", default=None)
    return parser


def _scenario_path(arg: str | None) -> Path:
    return Path(arg) if arg else bundled_scenario_path()


def _print_outputs(record: RunRecord) -> None:
    view = {"config_hash": record.config_hash,
            "determinism_hash": record.determinism_hash,
            "stages_run": record.stages_run,
            "outputs": record.outputs}
    if record.failures:
        view["failures"] = record.failures
    if record.run_dir:
        view["run_dir"] = record.run_dir
    print(json.dumps(view, indent=2, sort_keys=True))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad arguments already; normalize other codes
        return EXIT_VALIDATION if exc.code not in (0,) else 0

    try:
        if args.verb == "export":
            manifest = export_plots(args.record, args.kind,
                                    output_dir=args.output_dir)
            print(json.dumps(manifest, indent=2, sort_keys=True))
            return EXIT_OK

        config = load_scenario(_scenario_path(args.scenario))
        if args.verb == "run":
            stages = tuple(s.strip() for s in args.stages.split(",")) \
                if args.stages else None
        else:
            stages = _VERB_STAGES[args.verb]
        record = run_pipeline(config, stages=stages,
                              output_dir=args.output_dir,
                              seed_override=args.seed)
        _print_outputs(record)
        if record.failures:
            # a stage raised a numerical error; partial outputs persisted
            print(f"stage failure: {record.failures[0]}", file=sys.stderr)
            return EXIT_NUMERICAL
        return EXIT_OK
    except (ScenarioError, PipelineError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, KeyError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RuntimeError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
