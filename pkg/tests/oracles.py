"""Closed-form oracles the tests compare the package against.

Every function here is derived independently of the implementation route
used inside the package: level energies come from the J = 1/2 closed form
rather than matrix diagonalization, transmitted pulse energies from the
scalar absorption law rather than the PDE solver, etalon suppression from
the half-width identity rather than the sampled Airy curve. Constants are
taken from scipy.constants so a transcription slip in the package's data
file cannot silently cancel.
"""

import numpy as np
from scipy.constants import physical_constants

MU_B_HZ_PER_T = physical_constants["Bohr magneton in Hz/T"][0]


def breit_rabi_energies(nuclear_spin: float, a_hfs_hz: float, g_j: float,
                        g_i: float, field_t: float) -> np.ndarray:
    """All J = 1/2 manifold energies (Hz) at one field, sorted ascending.

    Closed form for H = A I.J + (mu_B B / h)(g_J J_z + g_I I_z): stretched
    |m_F| = I + 1/2 states are exact product states at every field; the
    remaining m_F blocks are 2x2 and give the textbook square-root pair.
    """
    I = nuclear_spin
    dw = a_hfs_hz * (I + 0.5)
    mu = MU_B_HZ_PER_T * field_t
    x = (g_j - g_i) * mu / dw

    energies = []
    for sign in (+1.0, -1.0):
        energies.append(a_hfs_hz * I / 2.0 + sign * mu * (g_j / 2.0 + g_i * I))
    m_values = np.arange(-(I - 0.5), I - 0.5 + 1e-9, 1.0)
    for m in m_values:
        root = np.sqrt(1.0 + 4.0 * m * x / (2.0 * I + 1.0) + x * x)
        base = -dw / (2.0 * (2.0 * I + 1.0)) + g_i * mu * m
        energies.append(base + dw / 2.0 * root)
        energies.append(base - dw / 2.0 * root)
    return np.sort(np.asarray(energies))


def high_field_energy(a_hfs_hz: float, g_j: float, g_i: float, field_t: float,
                      m_i: float, m_j: float) -> float:
    """Paschen-Back limit of a J = 1/2 level: A m_I m_J + Zeeman (Hz).

    The nuclear Zeeman term g_I mu_B B m_I is part of the asymptote; at
    1 T scale it contributes ~ +-20 MHz and must not be dropped.
    """
    return (a_hfs_hz * m_i * m_j
            + MU_B_HZ_PER_T * field_t * (g_j * m_j + g_i * m_i))


def beer_lambert_energy_transmission(optical_depth: float, detuning_rad_s: float,
                                     gamma_rad_s: float) -> float:
    """Transmitted pulse energy fraction for a weak probe, no control.

    Two-level linear response: intensity attenuation exp(-d * L(Delta))
    with the unit-peak Lorentzian L = gamma^2 / (gamma^2 + Delta^2).
    """
    lorentz = gamma_rad_s**2 / (gamma_rad_s**2 + detuning_rad_s**2)
    return float(np.exp(-optical_depth * lorentz))


def airy_transmission(detuning_hz, fsr_hz: float, fwhm_hz: float,
                      peak_transmission: float = 1.0):
    """Airy transmission with the finesse coefficient fixed by the FWHM.

    T(delta) = T_pk / (1 + k sin^2(pi delta / FSR)) where k solves
    T(FWHM/2) = T_pk / 2, i.e. k = 1 / sin^2(pi FWHM / (2 FSR)).
    """
    k = 1.0 / np.sin(np.pi * fwhm_hz / (2.0 * fsr_hz)) ** 2
    return peak_transmission / (1.0 + k * np.sin(np.pi * np.asarray(detuning_hz) / fsr_hz) ** 2)


def airy_suppression_at_half_fsr_db(fsr_hz: float, fwhm_hz: float) -> float:
    """Suppression (positive dB) of one etalon at delta = FSR/2.

    From the half-width identity: T(FSR/2)/T(0) = 1/(1 + k) with
    k = 1/sin^2(pi FWHM / (2 FSR)); suppression = 10 log10(1 + k). The
    peak transmission cancels in the ratio.
    """
    k = 1.0 / np.sin(np.pi * fwhm_hz / (2.0 * fsr_hz)) ** 2
    return float(10.0 * np.log10(1.0 + k))


def hbt_detection_probability(alpha_sq: float, eta_det: float) -> float:
    """Expected clicks per weak coherent pulse on a 50:50 HBT pair.

    Each arm sees a coherent state of mean alpha_sq * eta_det / 2, so it
    clicks with probability 1 - exp(-alpha_sq * eta_det / 2); the
    calibration counts the two arms' singles, hence the sum of the two
    arm probabilities.
    """
    arm = 1.0 - np.exp(-alpha_sq * eta_det / 2.0)
    return float(2.0 * arm)


def exponential_efficiency(eta_zero: float, hold_s, tau_s: float):
    """Memory efficiency vs hold time for a single 1/e lifetime tau."""
    return eta_zero * np.exp(-np.asarray(hold_s) / tau_s)
