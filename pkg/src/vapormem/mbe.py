"""One-dimensional Maxwell-Bloch equations for a lambda-type memory.

Model
-----
Co-moving frame, dimensionless propagation coordinate z in [0, 1], slowly
varying envelopes. With kappa = sqrt(d * gamma / 2):

    dE/dz = i kappa P
    dP/dt = -(gamma + i Delta) P + i kappa E + i Omega S
    dS/dt = -(gamma_s + i delta) S + i conj(Omega) P

E(z, t) is the signal envelope normalized so that the time integral of
|E|^2 is a photon number. P and S are polarization and spin-wave
amplitudes per unit (dimensionless) length, so the z integrals of |P|^2
and |S|^2 are excitation numbers. d is the resonant optical depth of the
intensity: a weak resonant probe leaves with energy exp(-d) of the input
(exp(-d * gamma^2 / (gamma^2 + Delta^2)) off resonance).

gamma is the polarization amplitude decay in rad/s, i.e. the half width
of the homogeneous line (natural plus collisional). gamma_s is the spin
amplitude decay: stored energy |S|^2 decays at 1/tau, so gamma_s equals
1/(2 tau). Delta is the one-photon detuning of signal and control from
the excited state (rad/s, red negative); delta the two-photon detuning.

Energy bookkeeping is exact for the continuous equations:

    n_in - n_out(t) = [integral (|P|^2 + |S|^2) dz](t)
                      + 2 gamma  int |P|^2 dz dt'
                      + 2 gamma_s int |S|^2 dz dt'

which the discrete solver reproduces to its truncation error.

Doppler broadening can be modeled either as extra homogeneous width
folded into gamma (default at the bench operating point, where collisional
broadening dominates) or by Gauss-Hermite velocity classes that split P
and S into components with shifted one-photon detunings.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .pulses import PulseShape

__all__ = [
    "LambdaParams",
    "SolverOptions",
    "FieldGrid",
    "MemoryResult",
    "velocity_classes",
    "solve_mbe",
    "simulate_storage",
    "simulate_retrieval",
    "apply_control_leakage",
    "full_memory_cycle",
    "calibrate_leakage_amplitude",
]

# Explicit-RK stability guard: the fastest phase/decay rate per step.
_STABILITY_FRACTION = 0.1


@dataclass(frozen=True)
class LambdaParams:
    """Physical parameters of the lambda memory medium."""

    optical_depth: float
    excited_decay_rad_s: float
    detuning_rad_s: float = 0.0
    spinwave_decay_rate: float = 0.0
    two_photon_detuning_rad_s: float = 0.0
    doppler_sigma_rad_s: float = 0.0
    n_velocity_classes: int = 1

    def __post_init__(self):
        if not self.optical_depth >= 0:
            raise ValueError("optical depth must be >= 0")
        if not self.excited_decay_rad_s > 0:
            raise ValueError("excited-state decay gamma must be > 0")
        if not self.spinwave_decay_rate >= 0:
            raise ValueError("spin-wave decay rate must be >= 0")
        if not self.doppler_sigma_rad_s >= 0:
            raise ValueError("Doppler width must be >= 0")
        if self.n_velocity_classes < 1:
            raise ValueError("need at least one velocity class")
        if self.n_velocity_classes > 1 and self.doppler_sigma_rad_s == 0:
            raise ValueError("velocity classes need a nonzero Doppler width")

    @property
    def coupling_rad_s(self) -> float:
        """kappa = sqrt(d gamma / 2)."""
        return float(np.sqrt(0.5 * self.optical_depth * self.excited_decay_rad_s))

    @property
    def spinwave_lifetime_s(self) -> float:
        """1/e lifetime of the stored energy: tau = 1/(2 gamma_s)."""
        if self.spinwave_decay_rate == 0:
            return float("inf")
        return 0.5 / self.spinwave_decay_rate


def velocity_classes(params: LambdaParams) -> tuple[np.ndarray, np.ndarray]:
    """Detuning shifts and weights of the velocity discretization.

    Gauss-Hermite quadrature against the Maxwell-Boltzmann distribution:
    weights sum to one, shifts have standard deviation doppler_sigma.
    """
    n = params.n_velocity_classes
    if n == 1:
        return np.zeros(1), np.ones(1)
    nodes, weights = np.polynomial.hermite_e.hermegauss(n)
    return nodes * params.doppler_sigma_rad_s, weights / weights.sum()


@dataclass(frozen=True)
class SolverOptions:
    """Numerical controls for the method-of-lines integrator."""

    n_z: int = 64
    dt_s: float | None = None
    store_fields: bool = True
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.n_z < 4:
            raise ValueError("need at least 4 spatial points")
        if self.dt_s is not None and not self.dt_s > 0:
            raise ValueError("time step must be positive")


@dataclass(frozen=True)
class FieldGrid:
    """Space-time record of one solver run.

    signal/polarization/spinwave hold the field and the weighted coherent
    sums over velocity classes (equal to the class amplitudes themselves
    in the default single-class mode); they have shape (t, z) when the
    solver stored full fields and (1, z) otherwise. The excitation_*
    series are the true excitation numbers sum_v integral |X_v|^2 dz on
    the full time grid regardless of the store_fields setting; these are
    the quantities entering the photon-number balance.
    """

    z: np.ndarray
    t: np.ndarray
    signal: np.ndarray        # E(t, z)
    polarization: np.ndarray  # (t, z) weighted coherent sum over classes
    spinwave: np.ndarray      # (t, z) weighted coherent sum over classes
    t_full: np.ndarray
    excitation_polarization: np.ndarray
    excitation_spinwave: np.ndarray

    def __post_init__(self):
        for name in ("signal", "polarization", "spinwave"):
            arr = getattr(self, name)
            if arr.shape != (self.t.size, self.z.size):
                raise ValueError(f"{name} has shape {arr.shape}, expected (t, z)")
            if not np.all(np.isfinite(arr.view(float))):
                raise ValueError(f"{name} contains non-finite samples")
        for name in ("excitation_polarization", "excitation_spinwave"):
            arr = getattr(self, name)
            if arr.shape != self.t_full.shape:
                raise ValueError(f"{name} must be sampled on the full time grid")

    @property
    def spinwave_snapshot(self) -> np.ndarray:
        return self.spinwave[-1].copy()

    def excitation_numbers(self) -> tuple[float, float]:
        """(polarization, spin) excitation numbers at the final time."""
        return (float(self.excitation_polarization[-1]),
                float(self.excitation_spinwave[-1]))


@dataclass(frozen=True)
class MemoryResult:
    """Efficiencies and waveforms from a storage / retrieval simulation."""

    eta_storage: float
    eta_retrieval: float
    eta_internal_total: float
    input_photons: float
    stored_excitation: float
    retrieved_photons: float
    leaked_pulse: PulseShape | None = None
    retrieved_pulse: PulseShape | None = None
    spinwave_snapshot: np.ndarray | None = None
    unintentional_readout_fraction: float = 0.0
    decay_factor: float = 1.0

    def __post_init__(self):
        tol = 1e-6
        for name in ("eta_storage", "eta_retrieval", "eta_internal_total"):
            value = getattr(self, name)
            if not -tol <= value <= 1.0 + tol:
                raise ValueError(f"{name}={value} outside [0, 1]")


def _resolve_dt(params: LambdaParams, controls: list[PulseShape],
                options: SolverOptions) -> float:
    shifts, _ = velocity_classes(params)
    peak = max([c.peak() for c in controls] or [0.0])
    fastest = max(
        params.excited_decay_rad_s,
        abs(params.detuning_rad_s) + float(np.max(np.abs(shifts))),
        abs(params.two_photon_detuning_rad_s) + params.spinwave_decay_rate,
        peak,
    )
    dt_stable = _STABILITY_FRACTION / fastest
    if options.dt_s is None:
        return dt_stable
    if options.dt_s > dt_stable * (1.0 + 1e-12):
        raise ValueError(
            f"time step {options.dt_s:.3e} s exceeds the stability limit "
            f"{dt_stable:.3e} s (= {_STABILITY_FRACTION}/max rate); pass a smaller dt_s"
        )
    return options.dt_s


def solve_mbe(params: LambdaParams,
              control: PulseShape | Callable[[np.ndarray], np.ndarray],
              duration_s: float,
              signal_in: PulseShape | None = None,
              initial_spinwave: np.ndarray | None = None,
              options: SolverOptions = SolverOptions()) -> tuple[FieldGrid, PulseShape]:
    """Integrate the lambda-memory equations over [0, duration].

    The signal field is slaved to the polarization: at each Runge-Kutta
    stage E(z) is rebuilt from the boundary value E(0, t) = signal_in(t)
    by a cumulative trapezoid of i kappa P. Returns the space-time record
    and the output waveform E(z=1, t).

    Raises RuntimeError if the state stops being finite (with the failing
    time in the message) and ValueError for step-size violations.
    """
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    controls = [control] if isinstance(control, PulseShape) else []
    dt = _resolve_dt(params, controls, options)
    n_t = int(np.ceil(duration_s / dt - 1e-9))
    if n_t > options.max_steps:
        raise ValueError(
            f"{n_t} steps needed at dt={dt:.3e}s exceeds max_steps={options.max_steps}"
        )
    dt = duration_s / n_t
    t_grid = dt * np.arange(n_t + 1)

    n_z = options.n_z
    z = np.linspace(0.0, 1.0, n_z + 1)
    dz = z[1] - z[0]
    kappa = params.coupling_rad_s
    gamma = params.excited_decay_rad_s
    gamma_s = params.spinwave_decay_rate
    delta2 = params.two_photon_detuning_rad_s

    shifts, weights = velocity_classes(params)
    n_v = shifts.size
    root_w = np.sqrt(weights)[:, None]
    decay_p = (gamma + 1j * (params.detuning_rad_s + shifts))[:, None]
    decay_s = gamma_s + 1j * delta2

    omega_of_t = control.at if isinstance(control, PulseShape) else control
    if signal_in is None:
        e_in = lambda t: 0.0
    else:
        e_in = signal_in.at

    p = np.zeros((n_v, n_z + 1), dtype=complex)
    s = np.zeros((n_v, n_z + 1), dtype=complex)
    if initial_spinwave is not None:
        init = np.asarray(initial_spinwave, dtype=complex)
        if init.shape == (n_z + 1,):
            # A bare spin wave is distributed across classes with the
            # quadrature weights so the velocity-averaged amplitude and the
            # total excitation both match the single-class picture.
            s = root_w * init[None, :]
        elif init.shape == (n_v, n_z + 1):
            s = init.copy()
        else:
            raise ValueError(
                f"initial spin wave has shape {init.shape}; expected "
                f"({n_z + 1},) or ({n_v}, {n_z + 1})"
            )

    def field_from(p_arr: np.ndarray, e0: complex) -> np.ndarray:
        """Slaved field E(z) from the weighted polarization by trapezoid."""
        p_eff = (root_w * p_arr).sum(axis=0)
        cum = np.cumsum(p_eff)
        inner = cum - 0.5 * p_eff - 0.5 * p_eff[0]
        e_z = e0 + 1j * kappa * dz * inner
        e_z[0] = e0
        return e_z

    def stage(p_arr, s_arr, t_now):
        om = complex(omega_of_t(t_now))
        e_z = field_from(p_arr, complex(e_in(t_now)))
        dp = -decay_p * p_arr + (1j * kappa) * (root_w * e_z[None, :]) + (1j * om) * s_arr
        ds = -decay_s * s_arr + (1j * np.conj(om)) * p_arr
        return dp, ds, e_z

    store = options.store_fields
    if store:
        e_t = np.empty((n_t + 1, n_z + 1), dtype=complex)
        p_t = np.empty_like(e_t)
        s_t = np.empty_like(e_t)
    e_out = np.empty(n_t + 1, dtype=complex)
    exc_p = np.empty(n_t + 1)
    exc_s = np.empty(n_t + 1)

    for k in range(n_t + 1):
        t_now = t_grid[k]
        k1p, k1s, e_now = stage(p, s, t_now)
        e_out[k] = e_now[-1]
        exc_p[k] = np.trapezoid((np.abs(p) ** 2).sum(axis=0), z)
        exc_s[k] = np.trapezoid((np.abs(s) ** 2).sum(axis=0), z)
        if store:
            e_t[k] = e_now
            p_t[k] = (root_w * p).sum(axis=0)
            s_t[k] = (root_w * s).sum(axis=0)
        if k == n_t:
            break
        k2p, k2s, _ = stage(p + 0.5 * dt * k1p, s + 0.5 * dt * k1s, t_now + 0.5 * dt)
        k3p, k3s, _ = stage(p + 0.5 * dt * k2p, s + 0.5 * dt * k2s, t_now + 0.5 * dt)
        k4p, k4s, _ = stage(p + dt * k3p, s + dt * k3s, t_now + dt)
        p = p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        s = s + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        if k % 64 == 0 and not (np.all(np.isfinite(p.view(float)))
                                and np.all(np.isfinite(s.view(float)))):
            raise RuntimeError(
                f"solver state became non-finite at t={t_now + dt:.3e} s "
                f"(step {k + 1}/{n_t}, dt={dt:.3e} s)"
            )

    if not (np.all(np.isfinite(p.view(float))) and np.all(np.isfinite(s.view(float)))
            and np.all(np.isfinite(e_out.view(float)))):
        raise RuntimeError(f"solver state became non-finite at t={t_grid[-1]:.3e} s")

    if not store:
        # Keep only the end state; the grid reports it at a single time.
        e_t = field_from(p, complex(e_in(t_grid[-1])))[None, :]
        p_t = (root_w * p).sum(axis=0)[None, :]
        s_t = (root_w * s).sum(axis=0)[None, :]
        t_kept = t_grid[-1:]
    else:
        t_kept = t_grid
    grid = FieldGrid(z=z, t=t_kept, signal=e_t, polarization=p_t, spinwave=s_t,
                     t_full=t_grid, excitation_polarization=exc_p,
                     excitation_spinwave=exc_s)
    # Per-class end state rides along for exact multi-class restarts.
    object.__setattr__(grid, "_spinwave_classes", s)
    return grid, PulseShape(t_grid, e_out)


def _clip_unit(x: float) -> float:
    return float(min(max(x, 0.0), 1.0))


def simulate_storage(params: LambdaParams, signal_in: PulseShape,
                     control: PulseShape, duration_s: float | None = None,
                     options: SolverOptions = SolverOptions()) -> tuple[MemoryResult, FieldGrid]:
    """Map an input signal pulse onto the spin wave.

    eta_storage is the spin excitation at the end of the window divided by
    the input photon number, both evaluated on the solver grid.
    """
    if duration_s is None:
        duration_s = max(signal_in.time_s[-1], control.time_s[-1]) + 1.0e-9
    grid, leaked = solve_mbe(params, control, duration_s, signal_in=signal_in,
                             options=options)
    n_in = float(np.trapezoid(np.abs(signal_in.at(grid.t_full)) ** 2, grid.t_full))
    if n_in <= 0:
        raise ValueError("input signal carries no energy inside the window")
    stored = float(grid.excitation_spinwave[-1])
    eta_s = _clip_unit(stored / n_in)
    result = MemoryResult(
        eta_storage=eta_s,
        eta_retrieval=0.0,
        eta_internal_total=0.0,
        input_photons=n_in,
        stored_excitation=stored,
        retrieved_photons=0.0,
        leaked_pulse=leaked,
        spinwave_snapshot=grid.spinwave_snapshot,
    )
    return result, grid


def _spinwave_input(grid_or_s) -> tuple[np.ndarray, np.ndarray]:
    """(spinwave, z) from a FieldGrid or a bare array on the default grid."""
    if isinstance(grid_or_s, FieldGrid):
        classes = getattr(grid_or_s, "_spinwave_classes", None)
        s0 = classes if classes is not None else grid_or_s.spinwave_snapshot
        return np.asarray(s0, dtype=complex), grid_or_s.z
    s0 = np.asarray(grid_or_s, dtype=complex)
    z = np.linspace(0.0, 1.0, s0.shape[-1])
    return s0, z


def simulate_retrieval(params: LambdaParams, stored, control: PulseShape,
                       hold_time_s: float = 0.0, duration_s: float | None = None,
                       backward: bool = False,
                       options: SolverOptions = SolverOptions()) -> MemoryResult:
    """Read a stored spin wave back into light.

    The hold is applied analytically: the spin amplitude is scaled by
    exp(-hold/(2 tau)) so the stored energy decays as exp(-hold/tau).
    eta_retrieval is emitted photons over the excitation present when the
    control arrives (after the hold), so the product
    eta_storage * exp(-hold/tau) * eta_retrieval is the end-to-end
    internal efficiency. backward=True flips the spin wave in z, modeling
    retrieval opposite to the storage direction.
    """
    s0, z_in = _spinwave_input(stored)
    decay_amp = np.exp(-params.spinwave_decay_rate * hold_time_s)
    s0 = s0 * decay_amp
    if backward:
        s0 = s0[..., ::-1]
    if duration_s is None:
        duration_s = control.time_s[-1] + 1.0e-9
    opts = options
    if s0.shape[-1] != options.n_z + 1:
        opts = replace(options, n_z=s0.shape[-1] - 1)
    stored_in = float(np.trapezoid(np.sum(np.abs(np.atleast_2d(s0)) ** 2, axis=0),
                               np.linspace(0.0, 1.0, s0.shape[-1])))
    grid, emitted = solve_mbe(params, control, duration_s,
                              initial_spinwave=s0, options=opts)
    n_out = emitted.photon_number()
    eta_r = _clip_unit(n_out / stored_in) if stored_in > 0 else 0.0
    return MemoryResult(
        eta_storage=1.0,
        eta_retrieval=eta_r,
        eta_internal_total=eta_r,
        input_photons=stored_in,
        stored_excitation=float(grid.excitation_spinwave[-1]),
        retrieved_photons=n_out,
        retrieved_pulse=emitted,
        spinwave_snapshot=grid.spinwave_snapshot,
        decay_factor=float(decay_amp**2),
    )


def apply_control_leakage(params: LambdaParams, stored, leakage: PulseShape,
                          options: SolverOptions = SolverOptions()) -> MemoryResult:
    """Evolve a stored spin wave under residual control light.

    Models imperfect extinction during the hold: the leakage waveform acts
    as a weak control and reads out part of the spin wave early. The
    returned unintentional_readout_fraction is emitted photons over the
    excitation at the start of the hold; spinwave_snapshot carries the
    depleted spin wave for the subsequent retrieval.
    """
    s0, _ = _spinwave_input(stored)
    opts = options
    if s0.shape[-1] != options.n_z + 1:
        opts = replace(options, n_z=s0.shape[-1] - 1)
    stored_in = float(np.trapezoid(np.sum(np.abs(np.atleast_2d(s0)) ** 2, axis=0),
                               np.linspace(0.0, 1.0, s0.shape[-1])))
    duration = leakage.time_s[-1] - leakage.time_s[0]
    shifted = PulseShape(leakage.time_s - leakage.time_s[0], leakage.envelope)
    grid, emitted = solve_mbe(params, shifted, duration,
                              initial_spinwave=s0, options=opts)
    n_out = emitted.photon_number()
    fraction = _clip_unit(n_out / stored_in) if stored_in > 0 else 0.0
    result = MemoryResult(
        eta_storage=1.0,
        eta_retrieval=0.0,
        eta_internal_total=0.0,
        input_photons=stored_in,
        stored_excitation=float(grid.excitation_spinwave[-1]),
        retrieved_photons=n_out,
        retrieved_pulse=emitted,
        spinwave_snapshot=grid.spinwave_snapshot,
        unintentional_readout_fraction=fraction,
    )
    object.__setattr__(result, "_spinwave_classes",
                       getattr(grid, "_spinwave_classes", None))
    return result


def full_memory_cycle(params: LambdaParams, signal_in: PulseShape,
                      control_in: PulseShape, control_out: PulseShape,
                      hold_time_s: float, leakage: PulseShape | None = None,
                      backward: bool = False,
                      options: SolverOptions = SolverOptions()) -> MemoryResult:
    """Storage, hold (optionally with control leakage), then retrieval.

    eta_internal_total is retrieved photons over input photons and equals
    eta_storage * decay_factor * eta_retrieval by construction, where
    decay_factor collects the exp(-hold/tau) spin decay and any leakage
    depletion during the hold. A supplied leakage waveform is simulated
    explicitly over its own window, which counts toward the hold: the
    analytic decay covers only the remaining hold_time_s - duration.
    """
    store_res, grid = simulate_storage(params, signal_in, control_in,
                                       options=options)
    stored_obj: FieldGrid | np.ndarray = grid
    readout_fraction = 0.0
    survival = 1.0
    if leakage is not None and np.max(np.abs(leakage.envelope)) > 0:
        hold_time_s = max(0.0, hold_time_s - leakage.duration)
        leak_res = apply_control_leakage(params, grid, leakage, options=options)
        readout_fraction = leak_res.unintentional_readout_fraction
        if store_res.stored_excitation > 0:
            survival = leak_res.stored_excitation / store_res.stored_excitation
        classes = getattr(leak_res, "_spinwave_classes", None)
        stored_obj = classes if classes is not None else leak_res.spinwave_snapshot
    ret = simulate_retrieval(params, stored_obj, control_out,
                             hold_time_s=hold_time_s, backward=backward,
                             options=options)
    decay_factor = _clip_unit(ret.decay_factor * survival)
    eta_total = _clip_unit(store_res.eta_storage * decay_factor * ret.eta_retrieval)
    return MemoryResult(
        eta_storage=store_res.eta_storage,
        eta_retrieval=ret.eta_retrieval,
        eta_internal_total=eta_total,
        input_photons=store_res.input_photons,
        stored_excitation=store_res.stored_excitation,
        retrieved_photons=ret.retrieved_photons,
        leaked_pulse=store_res.leaked_pulse,
        retrieved_pulse=ret.retrieved_pulse,
        spinwave_snapshot=ret.spinwave_snapshot,
        unintentional_readout_fraction=readout_fraction,
        decay_factor=decay_factor,
    )


def calibrate_leakage_amplitude(params: LambdaParams, stored,
                                target_fraction: float,
                                frequency_hz: float, decay_s: float,
                                window_s: float,
                                options: SolverOptions = SolverOptions()) -> PulseShape:
    """Find the ringing amplitude that reads out a target fraction.

    Scales a decaying-sinusoid leakage waveform until the unintentional
    readout fraction matches target_fraction (bracketed root find on the
    log amplitude).
    """
    from scipy.optimize import brentq

    from .pulses import decaying_sinusoid

    if not 0 < target_fraction < 1:
        raise ValueError("target fraction must be in (0, 1)")

    def fraction_minus_target(log_amp: float) -> float:
        wave = decaying_sinusoid(10.0**log_amp, frequency_hz, decay_s, window_s)
        res = apply_control_leakage(params, stored, wave, options=options)
        return res.unintentional_readout_fraction - target_fraction

    lo, hi = 4.0, 9.5
    f_lo, f_hi = fraction_minus_target(lo), fraction_minus_target(hi)
    tries = 0
    while f_lo > 0 and tries < 4:
        lo -= 2.0
        f_lo = fraction_minus_target(lo)
        tries += 1
    while f_hi < 0 and tries < 8:
        hi += 1.0
        f_hi = fraction_minus_target(hi)
        tries += 1
    if f_lo > 0 or f_hi < 0:
        raise RuntimeError("could not bracket the leakage amplitude")
    log_amp = brentq(fraction_minus_target, lo, hi, xtol=1e-4)
    return decaying_sinusoid(10.0**log_amp, frequency_hz, decay_s, window_s)
