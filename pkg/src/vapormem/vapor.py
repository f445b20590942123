"""Vapor density and Doppler/pressure-broadened absorption spectra.

Optical depth here is the intensity-attenuation exponent: transmitted
power = exp(-OD). The per-line cross-section integrates to
strength * (3 lambda^2 / 4) * Gamma_natural_Hz, which reproduces the
textbook peak cross-section 3 lambda^2 / (2 pi) for a cycling transition
with natural broadening only.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import wofz

from .constants import (
    C_LIGHT,
    ConstantsRegistry,
    K_BOLTZMANN,
    TORR_PA,
    default_constants,
)
from .structure import AtomSpec, TransitionLine

__all__ = [
    "AbsorptionSpectrum",
    "number_density",
    "vapor_pressure_pa",
    "voigt_absorption_spectrum",
    "default_frequency_grid",
    "spectrum_to_csv",
]


def vapor_pressure_pa(T: float, registry: ConstantsRegistry | None = None) -> float:
    """Rubidium vapor pressure (Pa) from the constants-file correlation."""
    registry = registry or default_constants()
    model = registry.vapor_pressure
    lo, hi = model.valid_range_k
    if not lo < T < hi:
        raise ValueError(
            f"temperature {T} K outside vapor-pressure model validity ({lo}, {hi}) K"
        )
    log10_torr = model.a + model.b / T + model.c * T + model.d * np.log10(T)
    return 10.0 ** log10_torr * TORR_PA


def number_density(T: float, enrichment: float, m_I_manifold_fraction: float,
                   registry: ConstantsRegistry | None = None) -> float:
    """Atoms per m^3 in the selected isotope and nuclear-spin manifold.

    enrichment is the isotope fraction of the total alkali density;
    m_I_manifold_fraction selects the share of one nuclear projection
    manifold (1/4 for the I=3/2 ground state: 2 of 8 Zeeman states).
    """
    if not 0.0 <= enrichment <= 1.0:
        raise ValueError(f"enrichment must be in [0, 1], got {enrichment}")
    if not 0.0 <= m_I_manifold_fraction <= 1.0:
        raise ValueError(f"manifold fraction must be in [0, 1], got {m_I_manifold_fraction}")
    p = vapor_pressure_pa(T, registry)
    return p / (K_BOLTZMANN * T) * enrichment * m_I_manifold_fraction


@dataclass(frozen=True)
class AbsorptionSpectrum:
    """Optical depth on a frequency grid (Hz, offsets from line center)."""

    frequency_hz: np.ndarray
    optical_depth: np.ndarray
    temperature_k: float
    lower_state_density_m3: float
    buffer_broadening_hz: float

    def __post_init__(self):
        if self.frequency_hz.shape != self.optical_depth.shape:
            raise ValueError("frequency grid and OD arrays must have equal shape")
        if np.any(self.optical_depth < 0):
            raise ValueError("optical depth must be non-negative")

    def peak_od(self, window_hz: tuple[float, float] | None = None) -> float:
        """Maximum OD, optionally restricted to a frequency window."""
        od = self.optical_depth
        if window_hz is not None:
            mask = (self.frequency_hz >= window_hz[0]) & (self.frequency_hz <= window_hz[1])
            if not np.any(mask):
                raise ValueError("window excludes the whole frequency grid")
            od = od[mask]
        return float(np.max(od))

    def od_at(self, frequency_hz: float) -> float:
        return float(np.interp(frequency_hz, self.frequency_hz, self.optical_depth))


def default_frequency_grid(span_hz: float = 60e9, step_hz: float = 10e6) -> np.ndarray:
    """Symmetric grid about the zero-field line center."""
    n = int(round(2 * span_hz / step_hz)) + 1
    return np.linspace(-span_hz, span_hz, n)


def doppler_sigma_hz(atom: AtomSpec, T: float) -> float:
    """Gaussian standard deviation of the Doppler profile (Hz)."""
    nu0 = C_LIGHT / atom.transition_wavelength_m
    return nu0 * np.sqrt(K_BOLTZMANN * T / (atom.mass_kg * C_LIGHT**2))


def _voigt_profile(delta_hz: np.ndarray, sigma_g: float, fwhm_l: float) -> np.ndarray:
    """Unit-area Voigt profile in Hz.

    Falls back to the closed-form Lorentzian when the Gaussian width is
    negligible (safe T -> 0 limit for the wofz evaluation).
    """
    half_l = 0.5 * fwhm_l
    if sigma_g <= 1e-9 * max(half_l, 1.0):
        return (half_l / np.pi) / (delta_hz**2 + half_l**2)
    z = (delta_hz + 1j * half_l) / (sigma_g * np.sqrt(2.0))
    return np.real(wofz(z)) / (sigma_g * np.sqrt(2.0 * np.pi))


def voigt_absorption_spectrum(lines: list[TransitionLine],
                              T: float,
                              n: float,
                              path_length_m: float,
                              buffer_broadening_hz: float,
                              atom: AtomSpec,
                              frequency_hz: np.ndarray | None = None,
                              buffer_shift_hz: float = 0.0) -> AbsorptionSpectrum:
    """Optical-depth spectrum summed over transition lines.

    n is the population density (m^-3) of each line's lower state: for an
    unpumped vapor pass total isotope density / (2(2I+1)). Doppler width
    follows from T and the atomic mass; the Lorentzian FWHM is the natural
    linewidth plus buffer_broadening_hz.
    """
    if n < 0:
        raise ValueError("density must be >= 0")
    if path_length_m <= 0:
        raise ValueError("path length must be > 0")
    if frequency_hz is None:
        frequency_hz = default_frequency_grid()

    od = np.zeros_like(frequency_hz, dtype=float)
    if lines and n > 0:
        lam = atom.transition_wavelength_m
        gamma_nat_hz = atom.natural_linewidth_rad_s / (2.0 * np.pi)
        sigma_g = doppler_sigma_hz(atom, T)
        fwhm_l = gamma_nat_hz + buffer_broadening_hz
        # integrated cross-section of the strength-1 line, m^2 Hz
        area = 0.75 * lam * lam * gamma_nat_hz
        for line in lines:
            center = line.frequency_offset_hz + buffer_shift_hz
            profile = _voigt_profile(frequency_hz - center, sigma_g, fwhm_l)
            od += line.dipole_strength * profile
        od *= n * path_length_m * area

    return AbsorptionSpectrum(
        frequency_hz=np.asarray(frequency_hz, dtype=float),
        optical_depth=od,
        temperature_k=T,
        lower_state_density_m3=n,
        buffer_broadening_hz=buffer_broadening_hz,
    )


def spectrum_to_csv(spectrum: AbsorptionSpectrum, path: str | Path | None = None) -> str:
    """CSV rendering `frequency_hz,optical_depth`; written to path if given."""
    buf = io.StringIO()
    buf.write("frequency_hz,optical_depth\n")
    for f, d in zip(spectrum.frequency_hz, spectrum.optical_depth):
        buf.write(f"{f:.6f},{d:.9e}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
