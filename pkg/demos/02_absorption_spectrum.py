"""Doppler- and pressure-broadened absorption of the warm vapor cell.

The probe sees a Voigt profile for every allowed line: Gaussian width
from the Maxwell velocity distribution at 90 C, Lorentzian width from
natural decay plus argon collisions (Rotondaro and Perram broadening
rates). The cell is short (2 mm) and isotopically enriched, and the
unpumped peak optical depth on the signal transition comes out near 2.

Run:  python3 demos/02_absorption_spectrum.py
Writes demos/output/absorption_spectrum.csv
"""

from pathlib import Path

import numpy as np

from vapormem.constants import default_constants
from vapormem.structure import atom_from_registry, transition_table
from vapormem.vapor import (doppler_sigma_hz, number_density,
                            spectrum_to_csv, vapor_pressure_pa,
                            voigt_absorption_spectrum)

FIELD_T = 1.06
TEMPERATURE_K = 363.15
LENGTH_M = 2.0e-3
ENRICHMENT = 0.90
BUFFER_MBAR = 11.0
BROADEN_HZ_PER_MBAR = 13.5e6
SHIFT_HZ_PER_MBAR = -4.4e6


def main():
    registry = default_constants()
    atom = atom_from_registry(registry)
    out_dir = Path(__file__).parent / "output"
    out_dir.mkdir(exist_ok=True)

    # 1. vapor thermodynamics
    pressure = vapor_pressure_pa(TEMPERATURE_K, registry)
    n_state = number_density(TEMPERATURE_K, ENRICHMENT, 1.0 / 8.0, registry)
    print(f"vapor pressure at {TEMPERATURE_K - 273.15:.0f} C: "
          f"{pressure * 1e3:.2f} mPa")
    print(f"per-Zeeman-state density (unpumped): {n_state / 1e6:.3e} cm^-3")
    print(f"Doppler sigma: {doppler_sigma_hz(atom, TEMPERATURE_K) / 1e6:.0f} "
          f"MHz; argon broadening: "
          f"{BUFFER_MBAR * BROADEN_HZ_PER_MBAR / 1e6:.0f} MHz FWHM")

    # 2. all sigma+ lines at the operating field
    lines = transition_table(atom, FIELD_T, polarization="sigma+")
    center = max(lines, key=lambda ln: ln.dipole_strength).frequency_offset_hz
    grid = center + np.linspace(-12e9, 12e9, 4801)
    spec = voigt_absorption_spectrum(
        lines, TEMPERATURE_K, n_state, LENGTH_M,
        BUFFER_MBAR * BROADEN_HZ_PER_MBAR, atom, frequency_hz=grid,
        buffer_shift_hz=BUFFER_MBAR * SHIFT_HZ_PER_MBAR)

    # 3. headline numbers
    peak = spec.peak_od(window_hz=(center - 3e9, center + 3e9))
    print(f"\npeak optical depth on the signal line: {peak:.3f}")
    print(f"transmission at line center: {np.exp(-peak):.3f}")

    # 4. a small map of the neighborhood
    print("\noptical depth across the scan:")
    for off in (-9e9, -6e9, -3e9, 0.0, 3e9, 6e9, 9e9):
        od = spec.od_at(center + off)
        bar = "#" * int(round(20 * od / peak))
        print(f"  {off / 1e9:+5.1f} GHz  od={od:5.2f}  {bar}")

    path = out_dir / "absorption_spectrum.csv"
    spectrum_to_csv(spec, path)
    print(f"\nwrote {path}")


if __name__ == "__main__":
    main()
