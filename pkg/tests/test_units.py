import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from polardimer.units import (CONSTANTS, UNIT_TAGS, constants_json, convert, reduced_mass,
                              temperature_to_energy)

_DIMENSION = {
    "hartree": "energy", "eV": "energy", "cm-1": "energy", "kelvin": "energy",
    "atomic_time": "time", "second": "time", "bohr": "length", "meter": "length",
    "field_au": "field", "V/m": "field", "kV/cm": "field", "dipole_au": "dipole", "debye": "dipole",
}
PAIRS = [(a, b) for a in UNIT_TAGS for b in UNIT_TAGS if _DIMENSION[a] == _DIMENSION[b]]


def test_atomic_unit_constants():
    assert CONSTANTS.hbar == 1.0
    assert 4 * math.pi * CONSTANTS.eps0 == pytest.approx(1.0, rel=1e-15)
    assert CONSTANTS.c == pytest.approx(137.035999084, rel=1e-12)


def test_hartree_in_ev_matches_codata():
    assert convert(1.0, "hartree", "eV") == pytest.approx(27.211386245988, rel=1e-13)


def test_strong_laboratory_field_in_kv_per_cm():
    # 4e-5 a.u. is quoted as about 200 kV/cm
    assert convert(4e-5, "field_au", "kV/cm") == pytest.approx(205.69, rel=1e-4)


def test_hartree_from_independent_si_values():
    # E_h = m_e c^2 alpha^2 with CODATA 2018 m_e and c
    m_e, c = 9.1093837015e-31, 299792458.0
    assert convert(1.0, "hartree", "eV") * 1.602176634e-19 == pytest.approx(m_e * c**2 / 137.035999084**2, rel=1e-9)


@pytest.mark.parametrize("unit", UNIT_TAGS)
def test_zero_maps_to_zero(unit):
    assert convert(0.0, unit, unit) == 0.0


def test_unknown_and_incompatible_units_rejected():
    with pytest.raises(ValueError, match="unknown unit"):
        convert(1.0, "furlong", "bohr")
    with pytest.raises(ValueError, match="cannot convert"):
        convert(1.0, "bohr", "second")


@given(st.sampled_from(PAIRS), st.floats(min_value=-1e12, max_value=1e12, allow_nan=False))
def test_round_trip(pair, x):
    a, b = pair
    back = convert(convert(x, a, b), b, a)
    assert back == pytest.approx(x, rel=1e-14, abs=1e-300)


@given(st.floats(min_value=0.0, max_value=1e4))
def test_temperature_mapping_is_linear(T):
    assert temperature_to_energy(2 * T) == pytest.approx(2 * temperature_to_energy(T), rel=1e-15)
    assert temperature_to_energy(T) == pytest.approx(convert(T, "kelvin", "hartree"), rel=1e-15)


def test_lics_reduced_mass():
    mu = reduced_mass(7.0160034366, 132.905451961)
    assert mu == pytest.approx(7.0160034366 * 132.905451961 / 139.9214553976 * 1822.888486209, rel=1e-14)


def test_constants_table_is_json():
    doc = json.loads(constants_json())
    assert doc["codata"] == "2018"
    assert set(doc["units"]) == set(UNIT_TAGS)
