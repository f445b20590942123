"""Spectral and polarization filtering: etalon stack plus budget arithmetic.

Etalons are ideal Airy filters; real insertion loss is absorbed into
peak_transmission. Suppression budgets work in dB (positive magnitudes)
and are additive across chain elements for a monochromatic line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EtalonSpec",
    "FilterChain",
    "etalon_transmission",
    "chain_transmission",
    "chain_transmission_db",
    "control_suppression_budget",
]


@dataclass(frozen=True)
class EtalonSpec:
    """Airy etalon: T(nu) = T_peak / (1 + (2F/pi)^2 sin^2(pi (nu - center_offset)/FSR))."""

    fsr_hz: float
    fwhm_hz: float
    peak_transmission: float = 1.0
    center_offset_hz: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.fwhm_hz < self.fsr_hz:
            raise ValueError(f"need 0 < fwhm < FSR, got fwhm={self.fwhm_hz}, FSR={self.fsr_hz}")
        if not 0.0 < self.peak_transmission <= 1.0:
            raise ValueError(f"peak transmission must be in (0, 1], got {self.peak_transmission}")

    @property
    def finesse(self) -> float:
        return self.fsr_hz / self.fwhm_hz


@dataclass(frozen=True)
class FilterChain:
    """Ordered etalons plus a broadband filter and polarization rejection.

    polarization_suppression_db is stored as a positive magnitude.
    broadband_transmission applies at the signal frequency; out-of-band
    light on the same path sees broadband_floor_db extra rejection.
    """

    etalons: tuple[EtalonSpec, ...] = field(default_factory=tuple)
    broadband_transmission: float = 1.0
    broadband_floor_db: float = 40.0
    polarization_suppression_db: float = 80.0

    def __post_init__(self):
        if not 0.0 < self.broadband_transmission <= 1.0:
            raise ValueError("broadband transmission must be in (0, 1]")
        if self.polarization_suppression_db < 0:
            raise ValueError("polarization suppression is a positive dB magnitude")


def etalon_transmission(spec: EtalonSpec, detuning_hz: float | np.ndarray) -> float | np.ndarray:
    """Power transmission of one etalon at the given detuning(s)."""
    coef = (2.0 * spec.finesse / np.pi) ** 2
    phase = np.pi * (np.asarray(detuning_hz, dtype=float) - spec.center_offset_hz) / spec.fsr_hz
    t = spec.peak_transmission / (1.0 + coef * np.sin(phase) ** 2)
    if np.isscalar(detuning_hz):
        return float(t)
    return t


def chain_transmission(chain: FilterChain, frequency_hz: np.ndarray,
                       amplitude: np.ndarray | None = None,
                       include_polarization: bool = False
                       ) -> tuple[np.ndarray, float]:
    """Filter an amplitude spectrum through the chain.

    Returns (transmitted amplitude spectrum, scalar power transmission =
    energy out / energy in). With amplitude omitted, a flat unit spectrum
    is assumed and the scalar is the mean power transmission. Polarization
    suppression applies only when asked for (it nulls the control, not the
    signal).
    """
    frequency_hz = np.asarray(frequency_hz, dtype=float)
    if amplitude is None:
        amplitude = np.ones_like(frequency_hz, dtype=complex)
    amplitude = np.asarray(amplitude)
    if amplitude.shape != frequency_hz.shape:
        raise ValueError("amplitude spectrum and frequency grid shapes differ")

    power_t = np.ones_like(frequency_hz, dtype=float)
    for spec in chain.etalons:
        power_t = power_t * etalon_transmission(spec, frequency_hz)
    power_t *= chain.broadband_transmission
    if include_polarization:
        power_t *= 10.0 ** (-chain.polarization_suppression_db / 10.0)

    out = amplitude * np.sqrt(power_t)
    energy_in = float(np.sum(np.abs(amplitude) ** 2))
    energy_out = float(np.sum(np.abs(out) ** 2))
    scalar = energy_out / energy_in if energy_in > 0 else 0.0
    return out, scalar


def chain_transmission_db(chain: FilterChain, detuning_hz: float,
                          include_polarization: bool = False,
                          include_broadband_floor: bool = False) -> float:
    """Suppression magnitude (positive dB) for a monochromatic line.

    dB contributions of the chain elements add exactly.
    """
    total_db = 0.0
    for spec in chain.etalons:
        total_db += -10.0 * np.log10(etalon_transmission(spec, detuning_hz))
    total_db += -10.0 * np.log10(chain.broadband_transmission)
    if include_broadband_floor:
        total_db += chain.broadband_floor_db
    if include_polarization:
        total_db += chain.polarization_suppression_db
    return float(total_db)


def control_suppression_budget(chain: FilterChain,
                               control_photons_per_pulse: float,
                               control_detuning_hz: float) -> float:
    """Residual control photons per pulse after polarization + spectral filtering."""
    if control_photons_per_pulse < 0:
        raise ValueError("control photon number must be >= 0")
    if control_photons_per_pulse == 0:
        return 0.0
    total_db = chain_transmission_db(chain, control_detuning_hz,
                                     include_polarization=True)
    return control_photons_per_pulse * 10.0 ** (-total_db / 10.0)
