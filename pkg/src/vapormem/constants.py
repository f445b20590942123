"""Atomic reference data loaded from the versioned constants file.

All isotope-specific numbers (hyperfine coefficients, g-factors, masses,
vapor-pressure coefficients, buffer-gas broadening) live in
``data/rubidium.yaml`` with literature citations. Code elsewhere in the
package receives them through the dataclasses below and must not hard-code
atomic constants.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

import yaml
from scipy.constants import physical_constants

# Fundamental constants (CODATA via scipy); frequency units are Hz unless
# a name says otherwise.
H_PLANCK = physical_constants["Planck constant"][0]
K_BOLTZMANN = physical_constants["Boltzmann constant"][0]
MU_BOHR = physical_constants["Bohr magneton"][0]
ATOMIC_MASS = physical_constants["atomic mass constant"][0]
C_LIGHT = physical_constants["speed of light in vacuum"][0]

MU_BOHR_HZ_PER_T = MU_BOHR / H_PLANCK

TORR_PA = 133.322368


@dataclass(frozen=True)
class ManifoldSpec:
    """Hyperfine and Zeeman data for one fine-structure manifold."""

    name: str
    term: str
    L: int
    J: float
    A_hfs_hz: float
    B_hfs_hz: float
    g_J: float

    @property
    def dim(self) -> int:
        return int(round(2 * self.J)) + 1


@dataclass(frozen=True)
class LineSpec:
    """One optical line connecting two manifolds of an isotope."""

    name: str
    lower: str
    upper: str
    wavelength_m: float
    natural_fwhm_hz: float

    @property
    def frequency_hz(self) -> float:
        return C_LIGHT / self.wavelength_m


@dataclass(frozen=True)
class IsotopeSpec:
    """One isotope with its manifolds and lines."""

    name: str
    nuclear_spin: float
    mass_u: float
    natural_abundance: float
    g_I: float
    manifolds: dict[str, ManifoldSpec] = field(default_factory=dict)
    lines: dict[str, LineSpec] = field(default_factory=dict)

    @property
    def mass_kg(self) -> float:
        return self.mass_u * ATOMIC_MASS

    def manifold(self, name: str) -> ManifoldSpec:
        return self.manifolds[name]

    def line(self, name: str = "d2") -> LineSpec:
        return self.lines[name]


@dataclass(frozen=True)
class VaporPressureModel:
    """log10(P/torr) = a + b/T + c*T + d*log10(T), T in kelvin."""

    species: str
    model: str
    a: float
    b: float
    c: float
    d: float
    valid_range_k: tuple[float, float]
    melting_point_k: float


@dataclass(frozen=True)
class BufferGasSpec:
    """Collisional broadening/shift coefficients for one buffer species."""

    species: str
    line: str
    broadening_fwhm_hz_per_mbar: float
    shift_hz_per_mbar: float


@dataclass(frozen=True)
class ConstantsRegistry:
    version: int
    isotopes: dict[str, IsotopeSpec]
    vapor_pressure: VaporPressureModel
    buffer_gases: dict[str, BufferGasSpec]

    def isotope(self, name: str) -> IsotopeSpec:
        try:
            return self.isotopes[name]
        except KeyError:
            raise KeyError(
                f"unknown isotope {name!r}; have {sorted(self.isotopes)}"
            ) from None

    def buffer_gas(self, species: str) -> BufferGasSpec:
        try:
            return self.buffer_gases[species]
        except KeyError:
            raise KeyError(
                f"unknown buffer gas {species!r}; have {sorted(self.buffer_gases)}"
            ) from None


def _default_path() -> Path:
    return Path(importlib.resources.files("vapormem") / "data" / "rubidium.yaml")


def load_constants(path: str | Path | None = None) -> ConstantsRegistry:
    """Parse the constants data file into a registry.

    The file is a YAML stream: a header document plus one document per
    isotope, manifold, line, vapor-pressure model, and buffer gas.
    """
    path = Path(path) if path is not None else _default_path()
    with open(path, "r", encoding="utf-8") as fh:
        docs = [d for d in yaml.safe_load_all(fh) if d is not None]

    header = [d for d in docs if d.get("kind") == "header"]
    if len(header) != 1:
        raise ValueError(f"constants file {path} needs exactly one header document")
    version = int(header[0]["version"])

    isotopes: dict[str, IsotopeSpec] = {}
    for d in docs:
        if d.get("kind") == "isotope":
            iso = IsotopeSpec(
                name=d["name"],
                nuclear_spin=float(d["nuclear_spin"]),
                mass_u=float(d["mass_u"]),
                natural_abundance=float(d["natural_abundance"]),
                g_I=float(d["g_I"]),
            )
            isotopes[iso.name] = iso

    for d in docs:
        kind = d.get("kind")
        if kind == "manifold":
            iso = isotopes[d["isotope"]]
            spec = ManifoldSpec(
                name=d["name"],
                term=str(d["term"]),
                L=int(d["L"]),
                J=float(d["J"]),
                A_hfs_hz=float(d["A_hfs_hz"]),
                B_hfs_hz=float(d["B_hfs_hz"]),
                g_J=float(d["g_J"]),
            )
            iso.manifolds[spec.name] = spec
        elif kind == "line":
            iso = isotopes[d["isotope"]]
            spec = LineSpec(
                name=d["name"],
                lower=d["lower"],
                upper=d["upper"],
                wavelength_m=float(d["wavelength_m"]),
                natural_fwhm_hz=float(d["natural_fwhm_hz"]),
            )
            iso.lines[spec.name] = spec

    vp_docs = [d for d in docs if d.get("kind") == "vapor_pressure"]
    if len(vp_docs) != 1:
        raise ValueError("constants file needs exactly one vapor_pressure document")
    vp = vp_docs[0]
    coeff = vp["coefficients"]
    vapor = VaporPressureModel(
        species=vp["species"],
        model=vp["model"],
        a=float(coeff["a"]),
        b=float(coeff["b"]),
        c=float(coeff["c"]),
        d=float(coeff["d"]),
        valid_range_k=(float(vp["valid_range_k"][0]), float(vp["valid_range_k"][1])),
        melting_point_k=float(vp["melting_point_k"]),
    )

    buffers: dict[str, BufferGasSpec] = {}
    for d in docs:
        if d.get("kind") == "buffer_gas":
            spec = BufferGasSpec(
                species=d["species"],
                line=d["line"],
                broadening_fwhm_hz_per_mbar=float(d["broadening_fwhm_hz_per_mbar"]),
                shift_hz_per_mbar=float(d["shift_hz_per_mbar"]),
            )
            buffers[spec.species] = spec

    return ConstantsRegistry(
        version=version,
        isotopes=isotopes,
        vapor_pressure=vapor,
        buffer_gases=buffers,
    )


_DEFAULT: ConstantsRegistry | None = None


def default_constants() -> ConstantsRegistry:
    """Registry from the bundled data file, loaded once per process."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_constants()
    return _DEFAULT
