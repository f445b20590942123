"""Desk-scale simulator and analysis toolkit for a warm-vapor lambda memory.

Subpackages by capability:

- constants, structure, vapor: atomic data, hyperfine Paschen-Back level
  structure, and Doppler/pressure-broadened absorption spectra.
- pulses, mbe, control_opt: pulse containers, the three-level
  Maxwell-Bloch storage/retrieval solver, and control-pulse optimization.
- filters: etalon stack transmission and suppression budgets.
- timetags, counting, lifetime: synthetic detection records, counting
  figures of merit, and memory-lifetime fits.
- scenario, pipeline, cli: declarative configs, run orchestration,
  persistence, and exports.
"""

from ._version import __version__
from .constants import ConstantsRegistry, default_constants, load_constants
from .control_opt import (EpisodeSpec, OptimizationResult, curve_to_csv,
                          efficiency_vs_od_curve, optimize_control)
from .counting import (CountSummary, FoMReport, Histogram, corrected_noise,
                       eta_det_hbt, figures_of_merit, histogram,
                       internal_efficiency, invert_eta_det_hbt,
                       snr_from_summary)
from .filters import (EtalonSpec, FilterChain, chain_transmission,
                      chain_transmission_db, control_suppression_budget,
                      etalon_transmission)
from .lifetime import (LifetimeFit, LifetimeSeries, fit_lifetime,
                       make_synthetic_series, select_model, series_from_csv,
                       series_to_csv)
from .mbe import (FieldGrid, LambdaParams, MemoryResult, SolverOptions,
                  apply_control_leakage, calibrate_leakage_amplitude,
                  full_memory_cycle, simulate_retrieval, simulate_storage,
                  solve_mbe)
from .pipeline import (PIPELINE_STAGES, PipelineError, RunRecord,
                       export_plots, run_pipeline)
from .pulses import (PulseShape, decaying_sinusoid, gaussian_control,
                     pulse_from_csv, pulse_to_csv, signal_template)
from .scenario import (SCENARIO_SCHEMA, ScenarioConfig, ScenarioError,
                       bundled_scenario_path, load_scenario,
                       scenario_from_dict)
from .structure import (AtomSpec, TransitionLine, ZeemanEigenstate,
                        atom_from_registry, basis_states, build_hamiltonian,
                        diagonalize_manifold, find_state, transition_table)
from .timetags import (RateProfile, TimeTagStream, generate_timetags,
                       stream_from_binary, stream_from_csv, stream_to_binary,
                       stream_to_csv)
from .vapor import (AbsorptionSpectrum, default_frequency_grid,
                    doppler_sigma_hz, number_density, spectrum_to_csv,
                    vapor_pressure_pa, voigt_absorption_spectrum)

__all__ = [name for name in dir() if not name.startswith("_")]
