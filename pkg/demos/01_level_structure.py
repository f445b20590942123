"""Ground and excited Zeeman structure of Rb-87 at high magnetic field.

At 1.06 T the electron Zeeman interaction dominates the ground-state
hyperfine coupling, so the eigenstates regroup from |F, m_F> into
|m_J, m_I> (hyperfine Paschen-Back regime). The memory encodes the
spin wave between two of these states, split by roughly 35 GHz, which
is what lets a Fabry-Perot stack separate signal from control light.

Run:  python3 demos/01_level_structure.py
"""

import numpy as np

from vapormem.constants import default_constants
from vapormem.structure import (atom_from_registry, build_hamiltonian,
                                diagonalize_manifold, find_state,
                                transition_table)


def ground_states(atom, field_t):
    h = build_hamiltonian(atom, "ground", field_t)
    return diagonalize_manifold(h, atom.nuclear_spin, atom.j_ground)


def main():
    atom = atom_from_registry(default_constants())
    field = 1.06

    # 1. the ground manifold at the operating field
    print(f"ground manifold of {atom.name} at B = {field} T")
    print(f"{'m_J':>5} {'m_I':>5} {'E/h (GHz)':>12}")
    for state in sorted(ground_states(atom, field),
                        key=lambda s: s.energy_hz):
        print(f"{state.m_J:>5.1f} {state.m_I:>5.1f} "
              f"{state.energy_hz / 1e9:>12.4f}")

    # 2. the memory pair: same m_I, opposite m_J
    states = ground_states(atom, field)
    g = find_state(states, m_I=1.5, m_J=0.5)
    s = find_state(states, m_I=1.5, m_J=-0.5)
    split = abs(s.energy_hz - g.energy_hz)
    print(f"\n|g>-|s> splitting: {split / 1e9:.4f} GHz "
          f"(twice this sets the etalon free spectral range)")

    # 3. how the splitting moves with field
    print("\nsplitting versus field:")
    for b in (0.2, 0.6, 1.06, 1.5, 2.0):
        st = ground_states(atom, b)
        d = abs(find_state(st, m_I=1.5, m_J=-0.5).energy_hz
                - find_state(st, m_I=1.5, m_J=0.5).energy_hz)
        print(f"  B = {b:>5.2f} T -> {d / 1e9:7.3f} GHz")

    # 4. optical transitions that the sigma+ probe can drive
    lines = transition_table(atom, field, polarization="sigma+")
    strongest = max(lines, key=lambda ln: ln.dipole_strength)
    print(f"\n{len(lines)} sigma+ lines on the D2 manifold; strongest from "
          f"(m_I={strongest.lower_state.m_I:+.1f}, "
          f"m_J={strongest.lower_state.m_J:+.1f}) "
          f"at {strongest.frequency_offset_hz / 1e9:+.2f} GHz, "
          f"relative strength {strongest.dipole_strength:.3f}")

    # 5. level grouping: four states per m_J branch, well separated
    energies = np.sort([st.energy_hz for st in states])
    print(f"\nbranch gap at {field} T: "
          f"{(energies[4] - energies[3]) / 1e9:.1f} GHz "
          f"(electron Zeeman) versus intra-branch spread "
          f"{np.ptp(energies[:4]) / 1e9:.1f} GHz (nuclear ladder)")


if __name__ == "__main__":
    main()
