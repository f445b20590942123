"""Shared fixtures: constants registry, atom, and a small pipeline run."""

import copy
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from vapormem.constants import default_constants
from vapormem.pipeline import run_pipeline
from vapormem.scenario import (bundled_scenario_path, load_scenario,
                               scenario_from_dict)
from vapormem.structure import atom_from_registry


@pytest.fixture(scope="session")
def registry():
    return default_constants()


@pytest.fixture(scope="session")
def atom(registry):
    return atom_from_registry(registry)


@pytest.fixture(scope="session")
def bundled_config():
    return load_scenario(bundled_scenario_path())


@pytest.fixture()
def scenario_data(bundled_config):
    """Mutable copy of the fully resolved bundled scenario."""
    return copy.deepcopy(bundled_config.data)


def small_scenario_data(bundled_config):
    """Bundled scenario scaled to 1/100 statistics (triggers and totals)."""
    data = copy.deepcopy(bundled_config.data)
    data["run"]["n_triggers"] = 181_000
    rates = data["run"]["declared_rates"]
    for key in ("n_ret_roi", "blocked_roi", "spurious_roi"):
        rates[key] = rates[key] / 100.0
    return data


@pytest.fixture(scope="session")
def small_run(tmp_path_factory, bundled_config):
    """One full pipeline run at 1/100 statistics, shared read-only."""
    cfg = scenario_from_dict(small_scenario_data(bundled_config),
                             source="small-run")
    out = tmp_path_factory.mktemp("small_run")
    return run_pipeline(cfg, output_dir=out)
