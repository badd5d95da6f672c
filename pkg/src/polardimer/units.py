"""Physical constants and unit conversions.

Everything inside the package works in Hartree atomic units
(hbar = m_e = e = 4 pi eps0 = 1).  The conversion factors below are frozen to
the CODATA 2018 recommended values so results do not drift with the installed
scipy version.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

# CODATA 2018, SI
HARTREE_J = 4.3597447222071e-18
HARTREE_EV = 27.211386245988
BOHR_M = 5.29177210903e-11
AU_TIME_S = 2.4188843265857e-17
AU_FIELD_V_PER_M = 5.14220674763e11
AU_DIPOLE_C_M = 8.4783536255e-30
KB_J_PER_K = 1.380649e-23
SPEED_OF_LIGHT_M_S = 299792458.0
ALPHA_INV = 137.035999084
ATOMIC_MASS_UNIT_ME = 1822.888486209  # unified atomic mass unit / electron mass
PLANCK_J_S = 6.62607015e-34
DEBYE_C_M = 1e-21 / SPEED_OF_LIGHT_M_S


@dataclass(frozen=True)
class PhysicalConstants:
    """Constants in atomic units plus SI conversion factors."""

    hbar: float = 1.0
    c: float = ALPHA_INV
    eps0: float = 1.0 / (4.0 * math.pi)
    kB: float = KB_J_PER_K / HARTREE_J  # hartree per kelvin
    electron_mass: float = 1.0
    hartree_J: float = HARTREE_J
    hartree_eV: float = HARTREE_EV
    bohr_m: float = BOHR_M
    au_time_s: float = AU_TIME_S
    au_field_V_per_m: float = AU_FIELD_V_PER_M
    au_dipole_C_m: float = AU_DIPOLE_C_M
    debye_C_m: float = DEBYE_C_M
    amu_me: float = ATOMIC_MASS_UNIT_ME


CONSTANTS = PhysicalConstants()

# unit tag -> (dimension, value of one unit in atomic units)
_UNITS: dict[str, tuple[str, float]] = {
    "hartree": ("energy", 1.0),
    "eV": ("energy", 1.0 / HARTREE_EV),
    "cm-1": ("energy", 100.0 * PLANCK_J_S * SPEED_OF_LIGHT_M_S / HARTREE_J),
    "kelvin": ("energy", CONSTANTS.kB),
    "atomic_time": ("time", 1.0),
    "second": ("time", 1.0 / AU_TIME_S),
    "bohr": ("length", 1.0),
    "meter": ("length", 1.0 / BOHR_M),
    "field_au": ("field", 1.0),
    "V/m": ("field", 1.0 / AU_FIELD_V_PER_M),
    "kV/cm": ("field", 1e5 / AU_FIELD_V_PER_M),
    "dipole_au": ("dipole", 1.0),
    "debye": ("dipole", DEBYE_C_M / AU_DIPOLE_C_M),
}

_ALIASES = {
    "Eh": "hartree",
    "K": "kelvin",
    "s": "second",
    "a0": "bohr",
    "m": "meter",
    "D": "debye",
}

UNIT_TAGS = tuple(_UNITS)


def _lookup(tag: str) -> tuple[str, float]:
    key = _ALIASES.get(tag, tag)
    try:
        return _UNITS[key]
    except KeyError:
        raise ValueError(f"unknown unit {tag!r}; supported: {', '.join(UNIT_TAGS)}") from None


def convert(value, from_unit: str, to_unit: str):
    """Convert ``value`` between two supported units of the same dimension.

    Temperatures are treated as energies through E = kB*T.
    """
    dim_a, scale_a = _lookup(from_unit)
    dim_b, scale_b = _lookup(to_unit)
    if dim_a != dim_b:
        raise ValueError(f"cannot convert {dim_a} ({from_unit}) to {dim_b} ({to_unit})")
    if scale_a == scale_b:
        return value * 1.0
    return value * (scale_a / scale_b)


def temperature_to_energy(T_kelvin: float) -> float:
    """Collision energy (hartree) associated with a temperature: E = kB*T."""
    return CONSTANTS.kB * T_kelvin


def reduced_mass(mass1_u: float, mass2_u: float) -> float:
    """Reduced mass in electron masses from two masses in unified atomic mass units."""
    return mass1_u * mass2_u / (mass1_u + mass2_u) * ATOMIC_MASS_UNIT_ME


def constants_table() -> dict:
    """Source-of-truth constant table, including the per-unit scale factors."""
    return {
        "codata": "2018",
        "constants": asdict(CONSTANTS),
        "units": {tag: {"dimension": dim, "atomic_units": scale} for tag, (dim, scale) in _UNITS.items()},
    }


def constants_json(indent: int = 2) -> str:
    return json.dumps(constants_table(), indent=indent, sort_keys=True)
