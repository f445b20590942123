"""Hyperfine + Zeeman level structure of alkali atoms at arbitrary field.

Builds the manifold Hamiltonian in the uncoupled |m_I, m_J> product basis,
diagonalizes it per m_F block, assigns adiabatic high-field labels, and
derives electric-dipole transition lines with strengths relative to the
strongest D2 transition (the stretched sigma line has strength 1).

Basis convention: kron(nuclear, electronic) with magnetic quantum numbers
ordered descending (m = +j, ..., -j) in each factor. Energies are in Hz,
relative to the manifold centroid (all Hamiltonian terms are traceless).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, sqrt

import numpy as np

from .constants import (
    ConstantsRegistry,
    IsotopeSpec,
    MU_BOHR_HZ_PER_T,
    default_constants,
)

__all__ = [
    "AtomSpec",
    "ZeemanEigenstate",
    "TransitionLine",
    "atom_from_registry",
    "basis_states",
    "build_hamiltonian",
    "diagonalize_manifold",
    "transition_table",
]


@dataclass(frozen=True)
class AtomSpec:
    """Species data for one D2-line alkali isotope, flattened for the solver.

    Frequencies are in Hz, the natural linewidth in rad/s. Instances come
    from :func:`atom_from_registry`; nothing here is hard-coded.
    """

    name: str
    nuclear_spin: float
    hyperfine_A_ground_hz: float
    hyperfine_A_excited_hz: float
    hyperfine_B_excited_hz: float
    g_J_ground: float
    g_J_excited: float
    g_I: float
    mass_kg: float
    transition_wavelength_m: float
    natural_linewidth_rad_s: float
    isotope_abundance: float
    j_ground: float = 0.5
    j_excited: float = 1.5

    def __post_init__(self):
        if self.nuclear_spin < 0 or round(2 * self.nuclear_spin) != 2 * self.nuclear_spin:
            raise ValueError(f"nuclear spin must be a non-negative half-integer, got {self.nuclear_spin}")
        if not 0.0 <= self.isotope_abundance <= 1.0:
            raise ValueError(f"abundance must be in [0, 1], got {self.isotope_abundance}")
        for label in ("hyperfine_A_ground_hz", "hyperfine_A_excited_hz",
                      "hyperfine_B_excited_hz", "natural_linewidth_rad_s"):
            if not np.isfinite(getattr(self, label)):
                raise ValueError(f"{label} must be finite")

    def manifold_params(self, manifold: str) -> tuple[float, float, float, float]:
        """(J, A_hfs, B_hfs, g_J) for 'ground' or 'excited'."""
        if manifold == "ground":
            return self.j_ground, self.hyperfine_A_ground_hz, 0.0, self.g_J_ground
        if manifold == "excited":
            return self.j_excited, self.hyperfine_A_excited_hz, self.hyperfine_B_excited_hz, self.g_J_excited
        raise ValueError(f"unknown manifold {manifold!r}; expected 'ground' or 'excited'")


def atom_from_registry(registry: ConstantsRegistry | None = None,
                       isotope: str = "rb87") -> AtomSpec:
    """Flatten constants-file data into an AtomSpec."""
    registry = registry or default_constants()
    iso: IsotopeSpec = registry.isotope(isotope)
    ground = iso.manifold("ground")
    excited = iso.manifold("excited_d2")
    line = iso.line("d2")
    return AtomSpec(
        name=iso.name,
        nuclear_spin=iso.nuclear_spin,
        hyperfine_A_ground_hz=ground.A_hfs_hz,
        hyperfine_A_excited_hz=excited.A_hfs_hz,
        hyperfine_B_excited_hz=excited.B_hfs_hz,
        g_J_ground=ground.g_J,
        g_J_excited=excited.g_J,
        g_I=iso.g_I,
        mass_kg=iso.mass_kg,
        transition_wavelength_m=line.wavelength_m,
        natural_linewidth_rad_s=2.0 * np.pi * line.natural_fwhm_hz,
        isotope_abundance=iso.natural_abundance,
        j_ground=ground.J,
        j_excited=excited.J,
    )


def _angular_momentum_ops(j: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Jz, J+, J-) matrices in the m = +j..-j descending basis."""
    dim = int(round(2 * j)) + 1
    m = j - np.arange(dim)
    jz = np.diag(m)
    jplus = np.zeros((dim, dim))
    for k in range(1, dim):
        # raising connects m[k] -> m[k] + 1 = m[k-1]
        jplus[k - 1, k] = sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    return jz, jplus, jplus.T


def basis_states(I: float, J: float) -> list[tuple[float, float]]:
    """(m_I, m_J) pairs in kron(nuclear, electronic) order."""
    mi = [I - k for k in range(int(round(2 * I)) + 1)]
    mj = [J - k for k in range(int(round(2 * J)) + 1)]
    return [(a, b) for a in mi for b in mj]


def build_hamiltonian(atom: AtomSpec, manifold: str, B: float) -> np.ndarray:
    """Hyperfine + Zeeman Hamiltonian (Hz) over |m_I, m_J> at field B (T).

    H = A * I.J + B_quad * quadrupole(I, J) + mu_B * B * (g_J Jz + g_I Iz) / h

    The electric-quadrupole term is included only for J >= 1 (here the D2
    excited manifold); it vanishes identically for J = 1/2.
    """
    if B < 0:
        raise ValueError(f"field magnitude must be >= 0, got {B}")
    I = atom.nuclear_spin
    J, A, Bq, g_J = atom.manifold_params(manifold)

    iz, iplus, iminus = _angular_momentum_ops(I)
    jz, jplus, jminus = _angular_momentum_ops(J)
    id_i = np.eye(iz.shape[0])
    id_j = np.eye(jz.shape[0])

    idotj = (np.kron(iz, jz)
             + 0.5 * (np.kron(iplus, jminus) + np.kron(iminus, jplus)))
    H = A * idotj

    if Bq != 0.0 and J >= 1.0 and I >= 1.0:
        dim = idotj.shape[0]
        num = (3.0 * idotj @ idotj + 1.5 * idotj
               - I * (I + 1) * J * (J + 1) * np.eye(dim))
        H = H + Bq * num / (2.0 * I * (2 * I - 1) * J * (2 * J - 1))

    H = H + MU_BOHR_HZ_PER_T * B * (g_J * np.kron(id_i, jz)
                                    + atom.g_I * np.kron(iz, id_j))
    return H


@dataclass(frozen=True)
class ZeemanEigenstate:
    """One eigenstate of a manifold at fixed field.

    energy_hz is relative to the manifold centroid. composition is the full
    amplitude vector over the |m_I, m_J> basis (support on one m_F block).
    The adiabatic labels (m_I, m_J) identify the basis state this eigenstate
    connects to in the high-field limit.
    """

    energy_hz: float
    m_F: float
    m_I: float
    m_J: float
    composition: np.ndarray
    basis: tuple[tuple[float, float], ...]

    @property
    def label(self) -> str:
        return f"|m_J={_half(self.m_J)}, m_I={_half(self.m_I)}>"

    def amplitude(self, m_I: float, m_J: float) -> complex:
        return self.composition[self.basis.index((m_I, m_J))]


def _half(x: float) -> str:
    n = int(round(2 * x))
    return f"{n:+d}/2" if n % 2 else f"{n // 2:+d}"


def diagonalize_manifold(H: np.ndarray, I: float, J: float) -> list[ZeemanEigenstate]:
    """Eigenstates of a manifold Hamiltonian, labeled adiabatically.

    Diagonalization runs per m_F block (the Hamiltonian is block-diagonal
    there by construction). Within each block, eigenstates keep ascending
    energy order and take the (m_I, m_J) label of their dominant basis
    component; contested labels go to the state with the larger weight and
    exact ties resolve by descending <I_z>.
    """
    scale = float(np.max(np.abs(H))) or 1.0
    if not np.allclose(H, H.conj().T, atol=1e-12 * scale):
        raise ValueError("Hamiltonian must be Hermitian")
    basis = basis_states(I, J)
    dim = len(basis)
    if H.shape != (dim, dim):
        raise ValueError(f"Hamiltonian shape {H.shape} does not match (2I+1)(2J+1) = {dim}")

    mf_values = sorted({mi + mj for mi, mj in basis}, reverse=True)
    states: list[ZeemanEigenstate] = []
    for mf in mf_values:
        idx = [k for k, (mi, mj) in enumerate(basis) if mi + mj == mf]
        sub = H[np.ix_(idx, idx)]
        try:
            evals, evecs = np.linalg.eigh(sub)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"eigen solver failed on m_F = {mf} block: {exc}") from exc

        # Exact degeneracies: order the degenerate group by descending <I_z>.
        mi_block = np.array([basis[k][0] for k in idx])
        if len(idx) > 1:
            gaps = np.diff(evals)
            if np.any(np.abs(gaps) <= 1e-9 * max(scale, 1.0)):
                weights_iz = (np.abs(evecs) ** 2 * mi_block[:, None]).sum(axis=0)
                order_cols = sorted(
                    range(len(idx)),
                    key=lambda c: (round(evals[c] / (1e-9 * max(scale, 1.0))),
                                   -weights_iz[c]),
                )
                evals = evals[order_cols]
                evecs = evecs[:, order_cols]

        # Greedy label assignment by descending component weight, so two
        # eigenstates never share a label even near 50/50 mixing.
        weights = np.abs(evecs) ** 2  # rows: basis within block, cols: states
        order = []
        for col in range(len(idx)):
            for row in range(len(idx)):
                order.append((weights[row, col], basis[idx[row]][0], row, col))
        order.sort(key=lambda t: (-t[0], -t[1]))  # weight desc, then <I_z> desc
        label_of_state: dict[int, int] = {}
        used_rows: set[int] = set()
        for _, _, row, col in order:
            if col in label_of_state or row in used_rows:
                continue
            label_of_state[col] = row
            used_rows.add(row)

        for col in range(len(idx)):
            row = label_of_state[col]
            mi, mj = basis[idx[row]]
            comp = np.zeros(dim, dtype=complex)
            comp[idx] = evecs[:, col]
            states.append(ZeemanEigenstate(
                energy_hz=float(evals[col]),
                m_F=mf,
                m_I=mi,
                m_J=mj,
                composition=comp,
                basis=tuple(basis),
            ))
    return states


def find_state(states: list[ZeemanEigenstate], m_I: float, m_J: float) -> ZeemanEigenstate:
    """Look up an eigenstate by its adiabatic labels."""
    for s in states:
        if s.m_I == m_I and s.m_J == m_J:
            return s
    raise KeyError(f"no state labeled m_I={m_I}, m_J={m_J}")


def clebsch_gordan(j1: float, m1: float, j2: float, m2: float,
                   j3: float, m3: float) -> float:
    """<j1 m1; j2 m2 | j3 m3> by Racah's closed form."""
    if m3 != m1 + m2:
        return 0.0
    if not (abs(j1 - j2) <= j3 <= j1 + j2):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0

    def f(x: float) -> int:
        return factorial(int(round(x)))

    pref = sqrt((2 * j3 + 1) * f(j3 + j1 - j2) * f(j3 - j1 + j2) * f(j1 + j2 - j3)
                / f(j1 + j2 + j3 + 1))
    pref *= sqrt(f(j3 + m3) * f(j3 - m3) * f(j1 - m1) * f(j1 + m1)
                 * f(j2 - m2) * f(j2 + m2))
    total = 0.0
    kmin = int(round(max(0, j2 - j3 - m1, j1 + m2 - j3)))
    kmax = int(round(min(j1 + j2 - j3, j1 - m1, j2 + m2)))
    for k in range(kmin, kmax + 1):
        total += ((-1) ** k
                  / (f(k) * f(j1 + j2 - j3 - k) * f(j1 - m1 - k) * f(j2 + m2 - k)
                     * f(j3 - j2 + m1 + k) * f(j3 - j1 - m2 + k)))
    return pref * total


_POLARIZATION = {-1: "sigma-", 0: "pi", +1: "sigma+"}


@dataclass(frozen=True)
class TransitionLine:
    """One electric-dipole line between ground and excited eigenstates.

    frequency_offset_hz is relative to the zero-field line center (the
    centroid-to-centroid frequency). dipole_strength is |amplitude|^2
    normalized so the stretched sigma transition at any field is ~1.
    """

    frequency_offset_hz: float
    dipole_strength: float
    polarization: str
    lower_state: ZeemanEigenstate
    upper_state: ZeemanEigenstate

    def __post_init__(self):
        if self.dipole_strength < 0:
            raise ValueError("dipole_strength must be >= 0")


def transition_amplitude(lower: ZeemanEigenstate, upper: ZeemanEigenstate,
                         q: int, j_lower: float, j_upper: float) -> complex:
    """Dipole amplitude <upper| d_q |lower> in stretched-line units.

    The dipole operator acts on the electronic part only (m_I is a
    spectator); the reduced matrix element is divided out, leaving the
    Clebsch-Gordan weight <J m_J; 1 q | J' m_J + q> per basis component.
    """
    basis = lower.basis
    amp = 0.0 + 0.0j
    for k, (mi, mj) in enumerate(basis):
        c_lo = lower.composition[k]
        if c_lo == 0:
            continue
        mj_up = mj + q
        if abs(mj_up) > j_upper:
            continue
        cg = clebsch_gordan(j_lower, mj, 1, q, j_upper, mj_up)
        if cg == 0.0:
            continue
        idx_up = upper.basis.index((mi, mj_up))
        amp += np.conj(upper.composition[idx_up]) * c_lo * cg
    return amp


def transition_table(atom: AtomSpec, B: float,
                     polarization: str | None = None,
                     strength_floor: float = 1e-6) -> list[TransitionLine]:
    """All dipole-allowed D2 lines at field B above a strength floor.

    polarization filters to one of 'pi', 'sigma+', 'sigma-' when given.
    Lines are sorted by frequency offset.
    """
    I = atom.nuclear_spin
    ground = diagonalize_manifold(build_hamiltonian(atom, "ground", B), I, atom.j_ground)
    excited = diagonalize_manifold(build_hamiltonian(atom, "excited", B), I, atom.j_excited)

    lines: list[TransitionLine] = []
    for q in (-1, 0, +1):
        pol = _POLARIZATION[q]
        if polarization is not None and pol != polarization:
            continue
        for lo in ground:
            for up in excited:
                if up.m_F != lo.m_F + q:
                    continue
                amp = transition_amplitude(lo, up, q, atom.j_ground, atom.j_excited)
                strength = float(abs(amp) ** 2)
                if strength < strength_floor:
                    continue
                lines.append(TransitionLine(
                    frequency_offset_hz=up.energy_hz - lo.energy_hz,
                    dipole_strength=strength,
                    polarization=pol,
                    lower_state=lo,
                    upper_state=up,
                ))
    lines.sort(key=lambda ln: ln.frequency_offset_hz)
    return lines
