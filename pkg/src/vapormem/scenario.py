"""Declarative scenario configuration: schema, validation, resolution.

A scenario is a YAML document describing one complete experiment:
atom and field, cell, pulses, memory solver settings, filter stack,
detectors, the run plan, analysis options, and random seeds. Loading
validates against a JSON schema (unknown keys rejected), fills schema
defaults, and records the provenance of every defaulted field plus a
content hash of the fully resolved document.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

__all__ = [
    "ScenarioError",
    "ScenarioConfig",
    "SCENARIO_SCHEMA",
    "load_scenario",
    "scenario_from_dict",
    "bundled_scenario_path",
]


class ScenarioError(ValueError):
    """Scenario file missing, unparseable, or schema-invalid."""


def _num(minimum=None, maximum=None, exclusive_min=None, default=None,
         description=None):
    out: dict = {"type": "number"}
    if minimum is not None:
        out["minimum"] = minimum
    if maximum is not None:
        out["maximum"] = maximum
    if exclusive_min is not None:
        out["exclusiveMinimum"] = exclusive_min
    if default is not None:
        out["default"] = default
    if description:
        out["description"] = description
    return out


def _obj(properties: dict, required: list[str] | None = None) -> dict:
    return {
        "type": "object",
        "properties": properties,
        "required": required or [],
        "additionalProperties": False,
    }


SCENARIO_SCHEMA: dict = _obj({
    "metadata": _obj({
        "name": {"type": "string"},
        "description": {"type": "string", "default": ""},
    }, ["name"]),
    "atom": _obj({
        "isotope": {"type": "string", "default": "rb87"},
        "field_tesla": _num(exclusive_min=0.0),
        "polarization_fraction": _num(0.0, 1.0, default=0.88),
    }, ["field_tesla"]),
    "cell": _obj({
        "length_m": _num(exclusive_min=0.0),
        "temperature_k": _num(exclusive_min=0.0),
        "buffer_gas": {"type": "string", "default": "argon"},
        "buffer_pressure_mbar": _num(0.0, default=0.0),
        "enrichment": _num(0.0, 1.0),
    }, ["length_m", "temperature_k", "enrichment"]),
    "pulses": _obj({
        "alpha_sq": _num(0.0, description="mean photon number of the signal"),
        "signal": _obj({
            "rise_s": _num(exclusive_min=0.0, default=0.5e-9),
            "decay_s": _num(exclusive_min=0.0, default=1.5e-9),
            "window_s": _num(exclusive_min=0.0, default=6.48e-9),
            "dt_s": _num(exclusive_min=0.0, default=2.0e-11),
        }),
        "control": _obj({
            "fwhm_s": _num(exclusive_min=0.0),
            "peak_omega_rad_s": _num(exclusive_min=0.0),
            "storage_center_s": {"type": "number", "default": -0.642e-9,
                                 "description": "relative to signal start"},
            "retrieval_center_s": {"type": "number", "default": 2.272e-9,
                                   "description": "relative to readout start"},
        }, ["fwhm_s", "peak_omega_rad_s"]),
        "detuning_rad_s": {"type": "number",
                           "description": "one-photon detuning, red negative"},
        "two_photon_detuning_rad_s": {"type": "number", "default": 0.0},
    }, ["alpha_sq", "control", "detuning_rad_s"]),
    "memory": _obj({
        "optical_depth": _num(exclusive_min=0.0,
                              description="resonant intensity OD seen by the solver"),
        "tau_s": _num(exclusive_min=0.0,
                      description="1/e memory-efficiency lifetime"),
        "hold_time_s": _num(0.0),
        "backward_retrieval": {"type": "boolean", "default": False},
        "solver": _obj({
            "n_z": {"type": "integer", "minimum": 4, "default": 64},
            "dt_s": {"type": ["number", "null"], "default": None},
            "n_velocity_classes": {"type": "integer", "minimum": 1,
                                   "default": 1},
        }),
    }, ["optical_depth", "tau_s", "hold_time_s"]),
    "leakage": _obj({
        "enabled": {"type": "boolean", "default": False},
        "frequency_hz": _num(exclusive_min=0.0, default=35.1e9),
        "decay_s": _num(exclusive_min=0.0, default=50e-9),
        "readout_fraction": _num(0.0, 1.0, default=0.05),
    }),
    "filters": _obj({
        "etalons": {
            "type": "array",
            "minItems": 1,
            "items": _obj({
                "fsr_hz": _num(exclusive_min=0.0),
                "fwhm_hz": _num(exclusive_min=0.0),
                "peak_transmission": _num(0.0, 1.0, default=1.0),
            }, ["fsr_hz", "fwhm_hz"]),
        },
        "broadband_transmission": _num(0.0, 1.0, default=0.95),
        "fiber_insertion_transmission": _num(0.0, 1.0, default=1.0),
        "polarization_suppression_db": _num(0.0, default=80.0),
    }, ["etalons"]),
    "detectors": _obj({
        "eta_det": _num(0.0, 1.0),
        "channels": {"type": "array", "items": {"type": "integer",
                                                "minimum": 0},
                     "minItems": 2, "maxItems": 2, "default": [0, 1]},
    }, ["eta_det"]),
    "run": _obj({
        "n_triggers": {"type": "integer", "minimum": 1},
        "repetition_rate_hz": _num(exclusive_min=0.0),
        "pump_window_s": _num(0.0, default=2.8e-6,
                              description="recorded metadata"),
        "bin_width_s": _num(exclusive_min=0.0, default=0.54e-9),
        "window_start_s": {"type": "number", "default": 0.0},
        "window_stop_s": _num(exclusive_min=0.0, default=27.0e-9),
        "roi": _obj({
            "start_s": {"type": "number"},
            "width_s": _num(exclusive_min=0.0),
        }, ["start_s", "width_s"]),
        "quiet_region": _obj({
            "start_s": {"type": "number"},
            "stop_s": {"type": "number"},
        }, ["start_s", "stop_s"]),
        "rates_from": {"type": "string", "enum": ["declared", "memory"],
                       "default": "declared"},
        "declared_rates": _obj({
            "n_ret_roi": _num(0.0),
            "blocked_roi": _num(0.0),
            "spurious_roi": _num(0.0, default=0.0),
        }, ["n_ret_roi", "blocked_roi"]),
        "hold_times_s": {"type": "array", "items": {"type": "number",
                                                    "minimum": 0.0},
                         "default": []},
    }, ["n_triggers", "repetition_rate_hz", "roi", "quiet_region",
        "declared_rates"]),
    "analysis": _obj({
        "alpha_sq_sigma": _num(0.0, default=0.06),
        "eta_det_sigma": _num(0.0, default=0.0),
        "lifetime_model": {"type": "string",
                           "enum": ["exponential", "gaussian", "auto"],
                           "default": "exponential"},
        "lifetime_scale_factor": _num(exclusive_min=0.0, default=1.0),
    }),
    "seeds": _obj({
        "tags": {"type": "integer", "minimum": 0, "default": 0},
        "blocked": {"type": "integer", "minimum": 0, "default": 1},
        "lifetime": {"type": "integer", "minimum": 0, "default": 2},
    }),
}, ["metadata", "atom", "cell", "pulses", "memory", "filters", "detectors",
    "run"])


def _fill_defaults(node, schema: dict, path: str,
                   filled: list[str]) -> None:
    """Recursively materialize schema defaults in place, recording paths."""
    if schema.get("type") != "object" or not isinstance(node, dict):
        return
    for key, sub in schema.get("properties", {}).items():
        child_path = f"{path}.{key}" if path else key
        if key not in node:
            if "default" in sub:
                node[key] = copy.deepcopy(sub["default"])
                filled.append(child_path)
            elif sub.get("type") == "object" and "properties" in sub:
                node[key] = {}
        if key in node:
            if sub.get("type") == "object":
                _fill_defaults(node[key], sub, child_path, filled)
            elif sub.get("type") == "array" and isinstance(node[key], list) \
                    and isinstance(sub.get("items"), dict):
                for i, item in enumerate(node[key]):
                    _fill_defaults(item, sub["items"],
                                   f"{child_path}[{i}]", filled)


def _format_error(err: jsonschema.ValidationError) -> str:
    parts = []
    for p in err.absolute_path:
        parts.append(f"[{p}]" if isinstance(p, int) else
                     (f".{p}" if parts else str(p)))
    where = "".join(parts) or "<root>"
    return f"{where}: {err.message}"


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario with provenance.

    data is the schema-validated document with all defaults applied;
    defaults_applied lists the dotted paths that came from schema
    defaults rather than the file; content_hash is a sha256 over the
    canonical JSON form of data.
    """

    data: dict
    defaults_applied: tuple[str, ...]
    content_hash: str
    source: str

    def __getitem__(self, key):
        return self.data[key]

    def section(self, name: str) -> dict:
        return self.data[name]

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True,
                              default_flow_style=False)

    def to_json(self) -> str:
        return canonical_json(self.data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_yaml(), encoding="utf-8")


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def _hash(data: dict) -> str:
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def scenario_from_dict(raw: dict, source: str = "<dict>") -> ScenarioConfig:
    """Validate, fill defaults, and hash an in-memory scenario tree."""
    if not isinstance(raw, dict):
        raise ScenarioError(f"{source}: scenario must be a mapping")
    data = copy.deepcopy(raw)
    filled: list[str] = []
    _fill_defaults(data, SCENARIO_SCHEMA, "", filled)
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        details = "; ".join(_format_error(e) for e in errors[:5])
        raise ScenarioError(f"{source}: {details}")
    return ScenarioConfig(data=data, defaults_applied=tuple(filled),
                          content_hash=_hash(data), source=source)


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load and resolve a scenario YAML file."""
    p = Path(path)
    if not p.exists():
        raise ScenarioError(f"scenario file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{p}: YAML parse error: {exc}") from exc
    return scenario_from_dict(raw, source=str(p))


def bundled_scenario_path(name: str = "paper_operating_point") -> Path:
    """Path of a scenario shipped with the package data."""
    base = resources.files("vapormem").joinpath("data")
    p = Path(str(base.joinpath(f"{name}.yaml")))
    if not p.exists():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return p
