import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polardimer.angular import AngularBasis
from polardimer.continuum import ContinuumBoxSettings, ContinuumState
from polardimer.eigen import EigenState, assemble
from polardimer.model import CurvePair, constant_curve
from polardimer.radial import RadialGrid, build_grid
from polardimer.transitions import (SPONTANEOUS_PREFACTOR, STIMULATED_PREFACTOR, RateEntry, ScanSettings,
                                    cross_section_scan, einstein_rate, formation_rate, lifetime, rate_matrix,
                                    spontaneous_rate, stimulated_cross_section, total_cross_section,
                                    transition_dipole, write_rate_csv, write_scan_csv)
from polardimer.units import AU_TIME_S, CONSTANTS, temperature_to_energy

MU, R0, D0 = 1000.0, 7.0, 1.3
B = 1.0 / (2 * MU * R0**2)
J_MAX = 12


def rotor_grid():
    return RadialGrid(np.array([R0]), np.ones(1), np.zeros((1, 1)), R0 - 1, R0 + 1, MU)


def rotor_curve(d=D0):
    return CurvePair(constant_curve(-0.01), constant_curve(d), MU)


def rotor_states(M, F=0.0, d=D0):
    """Eigenstates of a rigid rotor in a field, labeled (0, J, M) by adiabatic order."""
    H = assemble(rotor_grid(), AngularBasis(M, J_MAX), rotor_curve(d), F).toarray()
    e, V = np.linalg.eigh(H)
    js = np.arange(abs(M), J_MAX + 1)
    out = []
    for k in range(len(e)):
        v = V[:, k] * (1 if V[np.argmax(np.abs(V[:, k])), k] > 0 else -1)
        out.append(EigenState(float(e[k]), M, F, js, (0, int(js[k]), M), True, _coefficients=v[None, :].copy()))
    return out


def rotor_state(J, M, F=0.0):
    return next(s for s in rotor_states(M, F) if s.label[1] == J)


def test_prefactors():
    eps0 = 1 / (4 * math.pi)
    assert STIMULATED_PREFACTOR == pytest.approx(math.pi / (CONSTANTS.c * eps0), rel=1e-15)
    assert SPONTANEOUS_PREFACTOR == pytest.approx(4 / (3 * CONSTANTS.c**3), rel=1e-14)


def test_two_level_rate_formula():
    g = rotor_grid()
    up, low = rotor_state(1, 0), rotor_state(0, 0)
    d = D0 / math.sqrt(3)
    omega = 2 * B
    rate = spontaneous_rate(up, low, g, rotor_curve())
    assert rate.omega == pytest.approx(omega, rel=1e-12)
    assert rate.gamma == pytest.approx(omega**3 * d**2 / (3 * math.pi * CONSTANTS.c**3 / (4 * math.pi)), rel=1e-12)
    assert rate.tau_seconds == pytest.approx(AU_TIME_S / rate.gamma, rel=1e-15)


@pytest.mark.parametrize("J", [1, 2, 5, 9])
def test_cos_element_matches_closed_form(J):
    d = transition_dipole(rotor_state(J, 0), rotor_state(J - 1, 0), rotor_grid(), rotor_curve())
    assert d**2 == pytest.approx(D0**2 * J**2 / ((2 * J + 1) * (2 * J - 1)), rel=1e-12)


@pytest.mark.parametrize("J", [1, 2, 4, 7])
def test_hoenl_london_sum_independent_of_M(J):
    # summed over Delta M the J -> J-1 rate is omega^3 D^2 J/(2J+1) times the prefactor
    g, c = rotor_grid(), rotor_curve()
    expected = float(einstein_rate(2 * B * J, D0**2 * J / (2 * J + 1)))
    for M in range(-J, J + 1):
        up = rotor_state(J, M)
        total = sum(spontaneous_rate(up, rotor_state(J - 1, Mp), g, c).gamma
                    for Mp in (M - 1, M, M + 1) if abs(Mp) <= J - 1)
        assert total == pytest.approx(expected, rel=1e-12)


@given(st.integers(1, 6), st.integers(0, 5), st.sampled_from([-1, 0, 1]), st.floats(0.0, 3e-6))
def test_mirror_symmetry_of_rates(J, M, dM, F):
    M = min(M, J)
    Mp = M + dM
    if abs(Mp) > J_MAX:
        return
    g, c = rotor_grid(), rotor_curve()
    ups, lows = rotor_states(M, F), rotor_states(Mp, F)
    ups_m, lows_m = rotor_states(-M, F), rotor_states(-Mp, F)
    A = rate_matrix(ups, lows, c.dipole(g.points))
    Bm = rate_matrix(ups_m, lows_m, c.dipole(g.points))
    assert np.allclose(A, Bm, rtol=1e-10, atol=1e-30)


def test_field_free_selection_rules():
    g, c = rotor_grid(), rotor_curve()
    dip = c.dipole(g.points)
    for M, Mp in ((0, 0), (1, 0), (0, 1), (2, 1)):
        G = rate_matrix(rotor_states(M), rotor_states(Mp), dip)
        for a, up in enumerate(rotor_states(M)):
            for b, low in enumerate(rotor_states(Mp)):
                if abs(up.label[1] - low.label[1]) != 1:
                    assert abs(G[a, b]) < 1e-30


def test_field_opens_forbidden_channels():
    g, c = rotor_grid(), rotor_curve()
    F = 2 * B / D0
    G = rate_matrix(rotor_states(0, F), rotor_states(0, F), c.dipole(g.points))
    # J=2 -> J=0 is forbidden without a field
    assert G[2, 0] > 1e-6 * G[1, 0]


def test_forbidden_and_uphill_transitions_rejected():
    g, c = rotor_grid(), rotor_curve()
    with pytest.raises(ValueError, match="forbidden"):
        spontaneous_rate(rotor_state(3, 2), rotor_state(2, 0), g, c)
    with pytest.raises(ValueError, match="above"):
        spontaneous_rate(rotor_state(0, 0), rotor_state(1, 0), g, c)


def test_lifetime_sums_channels_and_ground_is_stable():
    g, c = rotor_grid(), rotor_curve()
    lower = rotor_states(0) + rotor_states(1) + rotor_states(-1)
    tau, entries = lifetime(rotor_state(1, 1), lower, g, c)
    assert [e.lower_label for e in entries] == [(0, 0, 0)]
    assert tau == pytest.approx(AU_TIME_S / entries[0].gamma, rel=1e-15)
    tau0, entries0 = lifetime(rotor_state(0, 0), lower, g, c)
    assert tau0 == math.inf and entries0 == []
    tau2, entries2 = lifetime(rotor_state(2, 0), lower, g, c)
    assert tau2 == pytest.approx(AU_TIME_S / sum(e.gamma for e in entries2), rel=1e-15)
    assert {e.lower_label for e in entries2} == {(0, 1, 0), (0, 1, 1), (0, 1, -1)}


# --- stimulated association on a separable toy ----------------------------

def toy_pair(ell_cont, ell_bound, norm=3.0, E_cont=1e-6, E_bound=-1e-3, d=0.7):
    g = build_grid(2.0, 20.0, 120, mu=MU)
    c = CurvePair(constant_curve(0.0), constant_curve(d), MU)
    R = g.points
    f_b = np.exp(-((R - 6.0) ** 2)) * np.sqrt(g.weights)
    f_c = np.exp(-((R - 6.5) ** 2) / 2) * np.sqrt(g.weights)
    f_b /= np.linalg.norm(f_b)
    f_c /= np.linalg.norm(f_c)
    js = np.arange(0, 4)
    Cb = np.zeros((g.N, 4))
    Cc = np.zeros((g.N, 4))
    Cb[:, ell_bound] = f_b
    Cc[:, ell_cont] = f_c
    bound = EigenState(E_bound, 0, 0.0, js, (5, ell_bound, 0), True, _coefficients=Cb)
    weights = np.zeros(4)
    weights[ell_cont] = 1.0
    cont = ContinuumState(EigenState(E_cont, 0, 0.0, js, None, False, _coefficients=Cc), norm, weights, ell_cont)
    return g, c, cont, bound, float(f_b @ f_c)


def test_separable_cross_section_oracle():
    d, norm = 0.7, 3.0
    g, c, cont, bound, overlap = toy_pair(1, 0, norm=norm, d=d)
    p = stimulated_cross_section(cont, bound, g, c, T=1e-5)
    me = norm * d * overlap / math.sqrt(3)
    assert p.sigma == pytest.approx(math.pi / (CONSTANTS.c / (4 * math.pi)) * (1e-6 + 1e-3) * me**2, rel=1e-12)
    assert p.partial == {1: p.sigma}
    assert p.photon_energy == pytest.approx(1e-6 + 1e-3)


def test_s_to_s_association_vanishes_without_field():
    g, c, cont, bound, _ = toy_pair(0, 0)
    assert stimulated_cross_section(cont, bound, g, c).sigma == 0.0


@given(st.floats(1e-9, 1e-2))
def test_cross_section_vanishes_at_threshold_photon_energy(eps):
    E_b = -1e-3
    g, c, cont, bound, _ = toy_pair(1, 0, E_cont=E_b + eps, E_bound=E_b)
    ref = stimulated_cross_section(toy_pair(1, 0, E_cont=E_b + 1e-2, E_bound=E_b)[2], bound, g, c).sigma
    assert stimulated_cross_section(cont, bound, g, c).sigma == pytest.approx(ref * eps / 1e-2, rel=1e-9)


def test_cross_section_input_checks():
    g, c, cont, bound, _ = toy_pair(1, 0)
    with pytest.raises(ValueError, match="above"):
        stimulated_cross_section(toy_pair(1, 0, E_cont=-2e-3)[2], bound, g, c)
    with pytest.raises(ValueError, match="not bound"):
        stimulated_cross_section(cont, EigenState(-1e-3, 0, 0.0, bound.js, None, False,
                                                  _coefficients=bound.coefficients), g, c)


def test_total_cross_section_sums_partial_waves():
    g, c, cont1, bound, _ = toy_pair(1, 0)
    # a second ladder with a different norm, tagged as another outgoing wave
    _, _, cont2, _, _ = toy_pair(1, 0, norm=1.5)
    cont2 = ContinuumState(cont2.state, 1.5, cont2.partial_wave_weights, 3)
    tot = total_cross_section([cont1, cont2], bound, g, c)
    parts = [stimulated_cross_section(x, bound, g, c).sigma for x in (cont1, cont2)]
    assert tot.sigma == pytest.approx(sum(parts), rel=1e-15)
    assert tot.partial == {1: parts[0], 3: parts[1]}


# --- formation rate ---------------------------------------------------------

BASE = dict(sigma=1e-4, n1=1e12, n2=1e12, V=1e-6, I=1e3, photon_energy=3e-4, T=1e-3, mu=12148.1)


@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_formation_rate_scaling(a, b):
    r0 = formation_rate(**BASE).rate_per_second
    assert formation_rate(**{**BASE, "sigma": a * BASE["sigma"]}).rate_per_second == pytest.approx(a * r0, rel=1e-12)
    assert formation_rate(**{**BASE, "n1": a * 1e12, "n2": b * 1e12}).rate_per_second == pytest.approx(a * b * r0, rel=1e-12)
    assert formation_rate(**{**BASE, "I": a * 1e3}).rate_per_second == pytest.approx(a * r0, rel=1e-12)


def test_formation_rate_conventions():
    atomic = formation_rate(**BASE)
    thermal = formation_rate(**BASE, energy_width="thermal")
    assert thermal.rate_per_second / atomic.rate_per_second == pytest.approx(temperature_to_energy(1e-3), rel=1e-12)
    assert atomic.pair_volume_au == pytest.approx((2 * math.pi / (BASE["mu"] * temperature_to_energy(1e-3))) ** 1.5)
    with pytest.raises(ValueError):
        formation_rate(**BASE, energy_width="other")
    with pytest.raises(ValueError, match="T"):
        formation_rate(**{**BASE, "T": 0.0})


# --- exports and scans ------------------------------------------------------

def test_rate_csv_export(tmp_path):
    e = RateEntry((3, 1, 0), (2, 0, 0), 1e-3, 2e-20, 0)
    write_rate_csv(tmp_path / "r.csv", [e])
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0][:6] == ["v", "J", "M", "v_prime", "J_prime", "M_prime"]
    assert rows[1][:6] == ["3", "1", "0", "2", "0", "0"]
    assert float(rows[1][7]) == 2e-20
    assert float(rows[1][8]) == pytest.approx(AU_TIME_S / 2e-20)


@pytest.fixture(scope="module")
def scaled_scan(scaled_curve):
    settings = ScanSettings(J_max=6, box=ContinuumBoxSettings(levels_below_2kT=12, l_res=6))
    return cross_section_scan(scaled_curve, [0.0, 3e-4], [1e-4], [(13, 0, 0), (13, 1, 0)], settings)


def test_field_free_scan_obeys_partial_wave_rules(scaled_scan):
    assert not scaled_scan.diagnostics
    at0 = {p.target_label: p for p in scaled_scan.points if p.F == 0.0}
    s_target, p_target = at0[(13, 0, 0)], at0[(13, 1, 0)]
    # J=0 couples only to the p wave, J=1 only to s and d
    assert s_target.partial[1] > 0 and all(v < 1e-12 * s_target.sigma for k, v in s_target.partial.items() if k != 1)
    assert all(v < 1e-12 * p_target.sigma for k, v in p_target.partial.items() if k not in (0, 2))
    for p in scaled_scan.points:
        assert p.sigma == pytest.approx(sum(p.partial.values()), rel=1e-12)
        assert p.photon_energy > 0


def test_field_mixes_partial_waves(scaled_scan):
    atF = {p.target_label: p for p in scaled_scan.points if p.F > 0}
    s_target = atF[(13, 0, 0)]
    assert s_target.partial[0] > 1e-6 * s_target.sigma


def test_scan_csv(tmp_path, scaled_scan):
    write_scan_csv(tmp_path / "s.csv", scaled_scan.points)
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == ["F_au", "T_K", "v", "J", "M", "sigma_au", "E_cont_au"]
    assert len(rows) == 1 + len(scaled_scan.points)
    assert [float(x) for x in rows[1][:2]] == [0.0, 1e-4]


def test_empty_field_list_rejected(scaled_curve):
    with pytest.raises(ValueError):
        cross_section_scan(scaled_curve, [], [1e-4], [(13, 0, 0)])
