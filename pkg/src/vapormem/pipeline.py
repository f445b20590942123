"""Run orchestration: scenario stages, persistence, and plot exports.

The stage graph is fixed, matching the physical signal path:

    spectrum -> memory -> filters -> tags -> analysis

Any contiguous or partial selection runs in that order provided each
requested stage's inputs are available: analysis needs tags, and tags
need detection rates (either the declared rates in the scenario, or the
memory and filters stages in the same run when rates_from = memory).

A run produces a RunRecord (JSON) plus CSV sidecars in the output
directory. Reruns with identical config and seeds are bit-identical in
all numeric outputs; the determinism hash covers the resolved config and
every stage output but not wall-clock timestamps.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ._version import __version__
from .constants import default_constants
from .counting import (corrected_noise, figures_of_merit, histogram,
                       internal_efficiency)
from .filters import (EtalonSpec, FilterChain, chain_transmission_db,
                      etalon_transmission)
from .lifetime import (LifetimeSeries, fit_lifetime, select_model,
                       series_to_csv)
from .mbe import (LambdaParams, SolverOptions, calibrate_leakage_amplitude,
                  full_memory_cycle)
from .pulses import PulseShape, gaussian_control, pulse_to_csv, signal_template
from .scenario import ScenarioConfig, canonical_json, load_scenario
from .structure import atom_from_registry, build_hamiltonian, \
    diagonalize_manifold, find_state, transition_table
from .timetags import RateProfile, generate_timetags, stream_to_binary, \
    stream_to_csv
from .vapor import (doppler_sigma_hz, number_density,
                    spectrum_to_csv, voigt_absorption_spectrum)

__all__ = [
    "PIPELINE_STAGES",
    "PipelineError",
    "RunRecord",
    "run_pipeline",
    "export_plots",
]

PIPELINE_STAGES = ("spectrum", "memory", "filters", "tags", "analysis")


class PipelineError(ValueError):
    """Invalid stage selection or missing artifact."""


@dataclass
class RunRecord:
    """Persistent result of one pipeline run.

    outputs maps stage name to a JSON-serializable dict; sidecars maps
    artifact name to a CSV/binary file written next to the record.
    failures lists stages that raised, with the error text; stages after
    a failure are not run but everything before it is preserved.
    """

    config_hash: str
    resolved_config: dict
    toolkit_version: str
    stages_run: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    sidecars: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    timestamps: dict = field(default_factory=dict)
    run_dir: str | None = None

    @property
    def determinism_hash(self) -> str:
        """Hash of all numeric outputs plus the resolved config.

        Excludes timestamps and file paths so reruns with identical
        config and seeds hash identically.
        """
        import hashlib
        payload = {"config_hash": self.config_hash,
                   "resolved_config": self.resolved_config,
                   "stages_run": self.stages_run,
                   "outputs": self.outputs,
                   "failures": self.failures,
                   "toolkit_version": self.toolkit_version}
        return hashlib.sha256(canonical_json(payload).encode()).hexdigest()

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash,
                "toolkit_version": self.toolkit_version,
                "determinism_hash": self.determinism_hash,
                "stages_run": self.stages_run,
                "outputs": self.outputs,
                "sidecars": self.sidecars,
                "failures": self.failures,
                "timestamps": self.timestamps,
                "resolved_config": self.resolved_config}

    def save(self, run_dir: str | Path) -> Path:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        path = run_dir / "run_record.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True),
                        encoding="utf-8")
        self.run_dir = str(run_dir)
        return path

    @classmethod
    def load(cls, path: str | Path) -> "RunRecord":
        path = Path(path)
        if path.is_dir():
            path = path / "run_record.json"
        if not path.exists():
            raise PipelineError(f"no run record at {path}")
        d = json.loads(path.read_text(encoding="utf-8"))
        rec = cls(config_hash=d["config_hash"],
                  resolved_config=d["resolved_config"],
                  toolkit_version=d["toolkit_version"],
                  stages_run=d["stages_run"], outputs=d["outputs"],
                  sidecars=d["sidecars"], failures=d["failures"],
                  timestamps=d["timestamps"], run_dir=str(path.parent))
        return rec


def _jsonable(value):
    """Coerce numpy scalars/arrays into plain JSON types."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    return str(value)


def _signal_line(atom, B: float):
    """The stretched sigma+ storage transition and the two ground states.

    Returns (line, |g>, |s>) where |g> and |s> are the m_I = +I ground
    states with m_J = +1/2 and -1/2.
    """
    I = atom.nuclear_spin
    ground = diagonalize_manifold(build_hamiltonian(atom, "ground", B),
                                  I, atom.j_ground)
    g = find_state(ground, m_I=I, m_J=+0.5)
    s = find_state(ground, m_I=I, m_J=-0.5)
    lines = transition_table(atom, B, polarization="sigma+")
    for line in lines:
        lo, up = line.lower_state, line.upper_state
        if (abs(lo.m_I - I) < 1e-6 and abs(lo.m_J - 0.5) < 1e-6
                and abs(up.m_I - I) < 1e-6 and abs(up.m_J - 1.5) < 1e-6):
            return line, g, s
    raise PipelineError("stretched sigma+ line not found in transition table")


def _buffer_broadening_hz(cfg: ScenarioConfig, registry) -> float:
    gas = registry.buffer_gas(cfg["cell"]["buffer_gas"])
    return gas.broadening_fwhm_hz_per_mbar * cfg["cell"]["buffer_pressure_mbar"]


def _buffer_shift_hz(cfg: ScenarioConfig, registry) -> float:
    gas = registry.buffer_gas(cfg["cell"]["buffer_gas"])
    return gas.shift_hz_per_mbar * cfg["cell"]["buffer_pressure_mbar"]


def _lambda_params(cfg: ScenarioConfig, registry, atom) -> LambdaParams:
    natural_fwhm_hz = atom.natural_linewidth_rad_s / (2.0 * np.pi)
    gamma = np.pi * (natural_fwhm_hz + _buffer_broadening_hz(cfg, registry))
    solver = cfg["memory"]["solver"]
    n_v = solver["n_velocity_classes"]
    doppler = 0.0
    if n_v > 1:
        doppler = 2.0 * np.pi * doppler_sigma_hz(atom, cfg["cell"]["temperature_k"])
    return LambdaParams(
        optical_depth=cfg["memory"]["optical_depth"],
        excited_decay_rad_s=float(gamma),
        detuning_rad_s=cfg["pulses"]["detuning_rad_s"],
        spinwave_decay_rate=0.5 / cfg["memory"]["tau_s"],
        two_photon_detuning_rad_s=cfg["pulses"]["two_photon_detuning_rad_s"],
        doppler_sigma_rad_s=doppler,
        n_velocity_classes=n_v,
    )


def _filter_chain(cfg: ScenarioConfig) -> FilterChain:
    f = cfg["filters"]
    etalons = tuple(EtalonSpec(fsr_hz=e["fsr_hz"], fwhm_hz=e["fwhm_hz"],
                               peak_transmission=e["peak_transmission"])
                    for e in f["etalons"])
    return FilterChain(etalons=etalons,
                       broadband_transmission=f["broadband_transmission"],
                       polarization_suppression_db=f["polarization_suppression_db"])


def _passive_transmission(cfg: ScenarioConfig) -> float:
    f = cfg["filters"]
    peaks = float(np.prod([e["peak_transmission"] for e in f["etalons"]]))
    return peaks * f["broadband_transmission"] * f["fiber_insertion_transmission"]


def _stage_spectrum(cfg: ScenarioConfig, work: dict, sidecar) -> dict:
    registry = default_constants()
    atom = atom_from_registry(registry, cfg["atom"]["isotope"])
    B = cfg["atom"]["field_tesla"]
    T = cfg["cell"]["temperature_k"]
    line, g_state, s_state = _signal_line(atom, B)
    splitting_hz = abs(s_state.energy_hz - g_state.energy_hz)

    # unpumped vapor: every ground Zeeman state carries an equal share
    n_states = int((2 * atom.nuclear_spin + 1) * (2 * atom.j_ground + 1))
    n_per_state = number_density(T, cfg["cell"]["enrichment"], 1.0 / n_states,
                                 registry)
    n_manifold = number_density(T, cfg["cell"]["enrichment"], 2.0 / n_states,
                                registry)

    lines = transition_table(atom, B, polarization="sigma+")
    center = line.frequency_offset_hz
    grid = center + np.linspace(-12e9, 12e9, 4801)
    spec = voigt_absorption_spectrum(
        lines, T, n_per_state, cfg["cell"]["length_m"],
        _buffer_broadening_hz(cfg, registry), atom, frequency_hz=grid,
        buffer_shift_hz=_buffer_shift_hz(cfg, registry))
    peak_od = spec.peak_od(window_hz=(center - 3e9, center + 3e9))

    work["atom"] = atom
    work["registry"] = registry
    work["ground_splitting_hz"] = splitting_hz
    sidecar("spectrum.csv", spectrum_to_csv(spec))
    return {
        "ground_splitting_hz": splitting_hz,
        "signal_line_offset_hz": center,
        "signal_line_strength": line.dipole_strength,
        "peak_od_signal_line": peak_od,
        "density_per_state_m3": n_per_state,
        "density_pumped_manifold_m3": n_manifold,
        "doppler_sigma_hz": doppler_sigma_hz(atom, T),
        "buffer_broadening_fwhm_hz": _buffer_broadening_hz(cfg, registry),
        "n_sigma_plus_lines": len(lines),
    }


def _stage_memory(cfg: ScenarioConfig, work: dict, sidecar) -> dict:
    registry = work.get("registry") or default_constants()
    atom = work.get("atom") or atom_from_registry(registry,
                                                  cfg["atom"]["isotope"])
    params = _lambda_params(cfg, registry, atom)
    solver = cfg["memory"]["solver"]
    options = SolverOptions(n_z=solver["n_z"], dt_s=solver["dt_s"])

    p = cfg["pulses"]
    sig_cfg = p["signal"]
    signal = signal_template(photon_number=p["alpha_sq"],
                             rise_s=sig_cfg["rise_s"],
                             decay_s=sig_cfg["decay_s"],
                             window_s=sig_cfg["window_s"],
                             dt_s=sig_cfg["dt_s"])
    ctl = p["control"]
    duration_in = sig_cfg["window_s"]
    control_in = gaussian_control(ctl["peak_omega_rad_s"], ctl["fwhm_s"],
                                  ctl["storage_center_s"],
                                  t_start=0.0, t_stop=duration_in,
                                  dt_s=sig_cfg["dt_s"])
    duration_out = max(24e-9, ctl["retrieval_center_s"] + 2.5 * ctl["fwhm_s"])
    control_out = gaussian_control(ctl["peak_omega_rad_s"], ctl["fwhm_s"],
                                   ctl["retrieval_center_s"],
                                   t_start=0.0, t_stop=duration_out,
                                   dt_s=sig_cfg["dt_s"])

    leak_cfg = cfg["leakage"]
    leakage = None
    if leak_cfg["enabled"]:
        from .mbe import simulate_storage
        _, grid = simulate_storage(params, signal, control_in, options=options)
        leakage = calibrate_leakage_amplitude(
            params, grid, leak_cfg["readout_fraction"],
            leak_cfg["frequency_hz"], leak_cfg["decay_s"],
            cfg["memory"]["hold_time_s"] or leak_cfg["decay_s"] * 4,
            options=options)

    result = full_memory_cycle(params, signal, control_in, control_out,
                               hold_time_s=cfg["memory"]["hold_time_s"],
                               leakage=leakage,
                               backward=cfg["memory"]["backward_retrieval"],
                               options=options)
    work["memory_result"] = result
    if result.retrieved_pulse is not None:
        sidecar("retrieved_pulse.csv", pulse_to_csv(result.retrieved_pulse))
    if result.leaked_pulse is not None:
        sidecar("leaked_pulse.csv", pulse_to_csv(result.leaked_pulse))
    return {
        "eta_storage": result.eta_storage,
        "eta_retrieval": result.eta_retrieval,
        "eta_internal_total": result.eta_internal_total,
        "decay_factor": result.decay_factor,
        "input_photons": result.input_photons,
        "stored_excitation": result.stored_excitation,
        "retrieved_photons": result.retrieved_photons,
        "unintentional_readout_fraction": result.unintentional_readout_fraction,
        "gamma_rad_s": params.excited_decay_rad_s,
        "coupling_rad_s": params.coupling_rad_s,
        "hold_time_s": cfg["memory"]["hold_time_s"],
    }


def _stage_filters(cfg: ScenarioConfig, work: dict, sidecar) -> dict:
    chain = _filter_chain(cfg)
    work["filter_chain"] = chain
    passive = _passive_transmission(cfg)
    work["passive_transmission"] = passive

    splitting = work.get("ground_splitting_hz")
    if splitting is None:
        registry = default_constants()
        atom = atom_from_registry(registry, cfg["atom"]["isotope"])
        _, g_state, s_state = _signal_line(atom, cfg["atom"]["field_tesla"])
        splitting = s_state.energy_hz - g_state.energy_hz

    first = chain.etalons[0]
    grid = np.linspace(-0.6 * first.fsr_hz, 0.6 * first.fsr_hz, 2401)
    response = np.ones_like(grid)
    for spec in chain.etalons:
        response = response * etalon_transmission(spec, grid)
    response = response * chain.broadband_transmission
    rows = ["detuning_hz,power_transmission"]
    rows += [f"{float(f)!r},{float(t)!r}" for f, t in zip(grid, response)]
    sidecar("filter_response.csv", "\n".join(rows) + "\n")

    peaks = float(np.prod([e.peak_transmission for e in chain.etalons]))
    return {
        "peak_transmission_product": peaks,
        "passive_transmission": passive,
        "fsr2_suppression_db": chain_transmission_db(
            FilterChain(etalons=(first,)), first.fsr_hz / 2.0)
            - (-10.0 * np.log10(first.peak_transmission)),
        "control_suppression_db": chain_transmission_db(
            chain, abs(splitting), include_polarization=True),
        "control_offset_hz": abs(splitting),
        "n_etalons": len(chain.etalons),
    }


def _declared_rate_profiles(cfg: ScenarioConfig, work: dict):
    """Per-trigger rate profiles reproducing the declared ROI totals."""
    run = cfg["run"]
    eta_det = cfg["detectors"]["eta_det"]
    n_trig = run["n_triggers"]
    roi_start = run["roi"]["start_s"]
    roi_width = run["roi"]["width_s"]
    w0, w1 = run["window_start_s"], run["window_stop_s"]
    declared = run["declared_rates"]

    t = np.linspace(w0, w1, 2001)
    # signal: shaped like the retrieved pulse when available, else the
    # input template, placed inside the ROI
    ret = work.get("memory_result")
    if ret is not None and ret.retrieved_pulse is not None:
        shape_t = ret.retrieved_pulse.time_s
        shape = np.abs(ret.retrieved_pulse.envelope) ** 2
    else:
        tpl = signal_template(window_s=roi_width,
                              rise_s=cfg["pulses"]["signal"]["rise_s"],
                              decay_s=cfg["pulses"]["signal"]["decay_s"])
        shape_t = tpl.time_s
        shape = np.abs(tpl.envelope) ** 2
    shape_t = shape_t - shape_t[0] + roi_start
    keep = shape_t <= roi_start + roi_width
    shape_t, shape = shape_t[keep], shape[keep]
    area = np.trapezoid(shape, shape_t)
    if area <= 0:
        raise PipelineError("retrieved pulse carries no energy for tag rates")

    sig_detected = (declared["n_ret_roi"] - declared["blocked_roi"]
                    - declared["spurious_roi"]) / n_trig
    if sig_detected < 0:
        raise PipelineError("declared rates imply negative signal counts")
    sig_rate = np.interp(t, shape_t, shape, left=0.0, right=0.0)
    sig_rate *= sig_detected / (area * eta_det)

    blocked_detected_rate = declared["blocked_roi"] / n_trig / roi_width
    spur_detected_rate = declared["spurious_roi"] / n_trig / roi_width
    flat_blocked = np.full_like(t, blocked_detected_rate / eta_det)
    flat_spur = np.full_like(t, spur_detected_rate / eta_det)

    signal_run_noise = RateProfile(t, flat_blocked + flat_spur)
    signal_run_signal = RateProfile(t, sig_rate)
    blocked_run_noise = RateProfile(t, flat_blocked)
    return signal_run_signal, signal_run_noise, blocked_run_noise


def _memory_rate_profiles(cfg: ScenarioConfig, work: dict):
    """Signal rates from the simulated memory; noise stays declared."""
    ret = work.get("memory_result")
    passive = work.get("passive_transmission")
    if ret is None or ret.retrieved_pulse is None or passive is None:
        raise PipelineError(
            "rates_from = memory requires the memory and filters stages")
    run = cfg["run"]
    eta_det = cfg["detectors"]["eta_det"]
    n_trig = run["n_triggers"]
    roi_start = run["roi"]["start_s"]
    w0, w1 = run["window_start_s"], run["window_stop_s"]
    declared = run["declared_rates"]
    t = np.linspace(w0, w1, 2001)

    pulse = ret.retrieved_pulse
    shape_t = pulse.time_s - pulse.time_s[0] + roi_start
    shape = np.abs(pulse.envelope) ** 2 * passive
    sig_rate = np.interp(t, shape_t, shape, left=0.0, right=0.0)

    roi_width = run["roi"]["width_s"]
    blocked_detected_rate = declared["blocked_roi"] / n_trig / roi_width
    spur_detected_rate = declared["spurious_roi"] / n_trig / roi_width
    flat_blocked = np.full_like(t, blocked_detected_rate / eta_det)
    flat_spur = np.full_like(t, spur_detected_rate / eta_det)
    return (RateProfile(t, sig_rate),
            RateProfile(t, flat_blocked + flat_spur),
            RateProfile(t, flat_blocked))


def _stage_tags(cfg: ScenarioConfig, work: dict, sidecar) -> dict:
    run = cfg["run"]
    mode = run["rates_from"]
    if mode == "memory":
        sig, noise, blocked = _memory_rate_profiles(cfg, work)
    else:
        sig, noise, blocked = _declared_rate_profiles(cfg, work)

    eta_det = cfg["detectors"]["eta_det"]
    channels = tuple(cfg["detectors"]["channels"])
    seeds = cfg["seeds"]
    signal_run = generate_timetags(sig, noise, run["n_triggers"], eta_det,
                                   seed=seeds["tags"],
                                   repetition_rate_hz=run["repetition_rate_hz"],
                                   channels=channels)
    blocked_run = generate_timetags(None, blocked, run["n_triggers"], eta_det,
                                    seed=seeds["blocked"],
                                    repetition_rate_hz=run["repetition_rate_hz"],
                                    channels=channels)
    work["signal_stream"] = signal_run
    work["blocked_stream"] = blocked_run
    sidecar("tags_signal.csv", stream_to_csv(signal_run))
    sidecar("tags_blocked.csv", stream_to_csv(blocked_run))
    return {
        "mode": mode,
        "n_records_signal": signal_run.n_records,
        "n_records_blocked": blocked_run.n_records,
        "expected_signal_per_trigger": sig.mean_per_trigger(),
        "expected_noise_per_trigger": noise.mean_per_trigger(),
        "seed_tags": seeds["tags"],
        "seed_blocked": seeds["blocked"],
    }


def _stage_analysis(cfg: ScenarioConfig, work: dict, sidecar) -> dict:
    signal_run = work.get("signal_stream")
    blocked_run = work.get("blocked_stream")
    if signal_run is None or blocked_run is None:
        raise PipelineError("analysis requires the tags stage")
    run = cfg["run"]
    ana = cfg["analysis"]
    window = (run["window_start_s"], run["window_stop_s"])
    hs = histogram(signal_run, run["bin_width_s"], window)
    hb = histogram(blocked_run, run["bin_width_s"], window)
    quiet = (run["quiet_region"]["start_s"], run["quiet_region"]["stop_s"])
    roi = (run["roi"]["start_s"], run["roi"]["width_s"])
    summary = corrected_noise(hs, hb, quiet, roi)

    passive = work.get("passive_transmission")
    if passive is None:
        passive = _passive_transmission(cfg)
    fom = figures_of_merit(summary, cfg["pulses"]["alpha_sq"],
                           cfg["detectors"]["eta_det"], run["n_triggers"],
                           alpha_sq_sigma=ana["alpha_sq_sigma"],
                           eta_det_sigma=ana["eta_det_sigma"],
                           passive_transmission=passive,
                           hold_time_s=cfg["memory"]["hold_time_s"],
                           memory_lifetime_s=cfg["memory"]["tau_s"])

    rows = ["time_s,signal_counts,blocked_counts"]
    for c, a, b in zip(hs.bin_centers_s, hs.counts, hb.counts):
        rows.append(f"{float(c)!r},{a},{b}")
    sidecar("histogram.csv", "\n".join(rows) + "\n")

    out = {
        "n_ret": summary.n_ret,
        "n_noise_blocked": summary.n_noise_blocked,
        "offset_per_bin": summary.offset_per_bin,
        "n_noise": summary.n_noise,
        "n_roi_bins": summary.n_roi_bins,
        "snr": fom.snr, "snr_sigma": fom.snr_sigma,
        "eta_hbt": fom.eta_hbt, "eta_hbt_sigma": fom.eta_hbt_sigma,
        "eta_e2e": fom.eta_e2e, "eta_e2e_sigma": fom.eta_e2e_sigma,
        "mu_1": fom.mu_1 if fom.mu_1_defined else None,
        "mu_1_sigma": fom.mu_1_sigma if fom.mu_1_defined else None,
        "mu_1_defined": fom.mu_1_defined,
        "passive_transmission": passive,
        "eta_int_zero_delay": fom.eta_int_zero_delay,
        "eta_int_zero_delay_sigma": fom.eta_int_zero_delay_sigma,
    }

    holds = run["hold_times_s"]
    if holds:
        series = _lifetime_series_mc(cfg, fom.eta_hbt, summary)
        series = series.scaled(ana["lifetime_scale_factor"])
        sidecar("lifetime_series.csv", series_to_csv(series))
        model = ana["lifetime_model"]
        fit = select_model(series) if model == "auto" \
            else fit_lifetime(series, model)
        out["lifetime"] = {
            "model": fit.model,
            "amplitude": fit.amplitude,
            "timescale_s": fit.timescale_s,
            "timescale_sigma_s": fit.timescale_sigma,
            "timescale_ci95_s": list(fit.timescale_ci95),
            "sse": fit.sse,
            "n_points": fit.n_points,
            "converged": fit.converged,
            "failed": fit.failed,
            "scale_factor": series.scale_factor,
        }
    return out


def _lifetime_series_mc(cfg: ScenarioConfig, eta_hbt: float,
                        summary) -> LifetimeSeries:
    """Per-hold efficiencies with Poisson statistics at run scale.

    The retrieved-count mean decays from the measured zero-reference ROI
    totals with the configured memory lifetime; each hold gets an
    independent Poisson draw of signal and noise counts.
    """
    run = cfg["run"]
    tau = cfg["memory"]["tau_s"]
    hold0 = cfg["memory"]["hold_time_s"]
    n_trig = run["n_triggers"]
    holds = np.asarray(run["hold_times_s"], dtype=float)
    rng = np.random.default_rng(cfg["seeds"]["lifetime"])
    mean_signal0 = summary.n_signal * np.exp(hold0 / tau)
    mean_noise = summary.n_noise
    eff, sig = [], []
    for hold in holds:
        mean_sig = mean_signal0 * np.exp(-hold / tau)
        n_ret = rng.poisson(mean_sig + mean_noise)
        n_noise = rng.poisson(mean_noise)
        eff.append((n_ret - n_noise) / (eta_hbt * n_trig))
        sig.append(np.sqrt(n_ret + n_noise) / (eta_hbt * n_trig))
    return LifetimeSeries(holds, np.array(eff), np.array(sig))


_STAGE_FUNCS = {
    "spectrum": _stage_spectrum,
    "memory": _stage_memory,
    "filters": _stage_filters,
    "tags": _stage_tags,
    "analysis": _stage_analysis,
}


def _validate_stage_plan(cfg: ScenarioConfig, stages: tuple[str, ...]):
    unknown = [s for s in stages if s not in PIPELINE_STAGES]
    if unknown:
        raise PipelineError(f"unknown stages {unknown}; "
                            f"valid: {list(PIPELINE_STAGES)}")
    plan = [s for s in PIPELINE_STAGES if s in stages]
    if "analysis" in plan and "tags" not in plan:
        raise PipelineError("analysis requires the tags stage in the same run")
    if "tags" in plan and cfg["run"]["rates_from"] == "memory":
        missing = {"memory", "filters"} - set(plan)
        if missing:
            raise PipelineError(
                f"tags with rates_from = memory requires stages {sorted(missing)}")
    return tuple(plan)


def run_pipeline(config: ScenarioConfig | str | Path,
                 stages=None,
                 output_dir: str | Path | None = None,
                 seed_override: int | None = None,
                 write_binary_tags: bool = False) -> RunRecord:
    """Execute pipeline stages in dependency order and persist results.

    config may be a ScenarioConfig or a path to a scenario YAML. stages
    is any subset of PIPELINE_STAGES (default: all). seed_override
    replaces the tag-generation seeds (blocked run uses seed + 1). A
    stage failure marks the record and halts; completed stages persist.
    """
    if not isinstance(config, ScenarioConfig):
        config = load_scenario(config)
    if seed_override is not None:
        data = json.loads(canonical_json(config.data))
        data["seeds"]["tags"] = int(seed_override)
        data["seeds"]["blocked"] = int(seed_override) + 1
        data["seeds"]["lifetime"] = int(seed_override) + 2
        from .scenario import scenario_from_dict
        config = scenario_from_dict(data, source=config.source)

    plan = _validate_stage_plan(
        config, tuple(stages) if stages else PIPELINE_STAGES)

    record = RunRecord(config_hash=config.content_hash,
                       resolved_config=config.data,
                       toolkit_version=__version__)
    work: dict = {}
    pending_sidecars: dict[str, str] = {}

    def sidecar(name: str, text: str):
        pending_sidecars[name] = text

    for stage in plan:
        record.timestamps[stage] = datetime.now(timezone.utc).isoformat()
        try:
            out = _STAGE_FUNCS[stage](config, work, sidecar)
        except PipelineError:
            raise
        except Exception as exc:  # noqa: BLE001 - failure is recorded
            record.failures.append({"stage": stage,
                                    "error": f"{type(exc).__name__}: {exc}"})
            break
        record.outputs[stage] = _jsonable(out)
        record.stages_run.append(stage)

    if output_dir is not None:
        out_dir = Path(output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in pending_sidecars.items():
            (out_dir / name).write_text(text, encoding="utf-8")
            record.sidecars[name] = name
        if write_binary_tags:
            for key, fname in (("signal_stream", "tags_signal.bin"),
                               ("blocked_stream", "tags_blocked.bin")):
                if key in work:
                    stream_to_binary(work[key], out_dir / fname)
                    record.sidecars[fname.replace(".csv", "")] = fname
        record.save(out_dir)
    else:
        record.sidecars = {name: None for name in pending_sidecars}
        record._sidecar_texts = pending_sidecars  # type: ignore[attr-defined]

    return record


def _manifest_entry(name: str, columns: list[tuple[str, str, str]]) -> dict:
    return {"file": name,
            "columns": [{"name": n, "unit": u, "description": d}
                        for n, u, d in columns]}


def export_plots(record: RunRecord | str | Path, kind: str,
                 output_dir: str | Path | None = None) -> dict:
    """Write a plot-tool-agnostic CSV bundle plus a manifest.

    kind is one of 'histogram', 'lifetime', 'od-curve'. The record (or
    its run directory) must contain the matching artifact; otherwise a
    PipelineError is raised. Returns the manifest dict; files land in
    output_dir (default: <run_dir>/export).
    """
    if not isinstance(record, RunRecord):
        record = RunRecord.load(record)
    if record.run_dir is None:
        raise PipelineError("record was not persisted; rerun with output_dir")
    run_dir = Path(record.run_dir)
    out_dir = Path(output_dir) if output_dir is not None else run_dir / "export"
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"kind": kind, "config_hash": record.config_hash,
                      "determinism_hash": record.determinism_hash,
                      "files": []}

    if kind == "histogram":
        src = run_dir / "histogram.csv"
        if not src.exists():
            raise PipelineError("record has no histogram artifact; "
                                "run the analysis stage first")
        shutil.copyfile(src, out_dir / "histogram.csv")
        manifest["files"].append(_manifest_entry("histogram.csv", [
            ("time_s", "s", "bin center, arrival time since trigger"),
            ("signal_counts", "counts", "unblocked-run counts per bin"),
            ("blocked_counts", "counts", "signal-blocked-run counts per bin"),
        ]))
    elif kind == "lifetime":
        src = run_dir / "lifetime_series.csv"
        lt = record.outputs.get("analysis", {}).get("lifetime")
        if not src.exists() or lt is None:
            raise PipelineError("record has no lifetime artifact; run the "
                                "analysis stage with run.hold_times_s set")
        from .lifetime import series_from_csv
        series = series_from_csv(src)
        fit = fit_lifetime(series, lt["model"])
        shutil.copyfile(src, out_dir / "lifetime_series.csv")
        t_dense = np.linspace(series.hold_time_s[0], series.hold_time_s[-1],
                              201)
        curve = fit.predict(t_dense)
        band = _prediction_band(fit, series, t_dense)
        rows = ["hold_time_s,fit_efficiency,ci95_low,ci95_high"]
        for i, t in enumerate(t_dense):
            rows.append(f"{float(t)!r},{float(curve[i])!r},"
                        f"{float(curve[i] - band[i])!r},"
                        f"{float(curve[i] + band[i])!r}")
        (out_dir / "lifetime_fit.csv").write_text("\n".join(rows) + "\n",
                                                  encoding="utf-8")
        manifest["files"].append(_manifest_entry("lifetime_series.csv", [
            ("hold_time_s", "s", "storage time"),
            ("efficiency", "1", "end-to-end efficiency"),
            ("uncertainty", "1", "one-sigma counting error"),
        ]))
        manifest["files"].append(_manifest_entry("lifetime_fit.csv", [
            ("hold_time_s", "s", "storage time, dense grid"),
            ("fit_efficiency", "1", f"{fit.model} model best fit"),
            ("ci95_low", "1", "lower 95% confidence band"),
            ("ci95_high", "1", "upper 95% confidence band"),
        ]))
        manifest["fit"] = {"model": fit.model, "timescale_s": fit.timescale_s,
                           "timescale_ci95_s": list(fit.timescale_ci95)}
    elif kind == "od-curve":
        src = run_dir / "od_curve.csv"
        if not src.exists():
            raise PipelineError("record has no od-curve artifact; generate "
                                "one with efficiency_vs_od_curve and place "
                                "od_curve.csv in the run directory")
        shutil.copyfile(src, out_dir / "od_curve.csv")
        manifest["files"].append(_manifest_entry("od_curve.csv", [
            ("optical_depth", "1", "resonant intensity optical depth"),
            ("efficiency", "1", "optimized total memory efficiency"),
            ("iterations", "1", "optimizer iterations used"),
            ("converged", "bool", "optimizer convergence flag"),
        ]))
    else:
        raise PipelineError(
            f"unknown export kind {kind!r}; "
            "valid: histogram, lifetime, od-curve")

    (out_dir / "export_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return manifest


def _prediction_band(fit, series: LifetimeSeries,
                     t_dense: np.ndarray) -> np.ndarray:
    """95% confidence band of the fitted curve via the parameter covariance."""
    from scipy import stats

    from .lifetime import _model_and_jac
    t = series.hold_time_s
    y = series.efficiency
    w = np.ones_like(y) if series.uncertainty is None \
        else 1.0 / series.uncertainty
    p = np.array([fit.amplitude, fit.timescale_s])
    ym, jac = _model_and_jac(fit.model, t, p)
    jac = jac * w[:, None]
    res = (ym - y) * w
    dof = max(t.size - 2, 1)
    cov = np.linalg.pinv(jac.T @ jac) * float(res @ res) / dof
    _, jd = _model_and_jac(fit.model, t_dense, p)
    var = np.einsum("ij,jk,ik->i", jd, cov, jd)
    tq = float(stats.t.ppf(0.975, dof))
    return tq * np.sqrt(np.clip(var, 0, None))
