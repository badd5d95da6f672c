import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polardimer.angular import AngularBasis
from polardimer.continuum import (ContinuumBoxSettings, ContinuumWindowError, asymptotic_ladders, asymptotic_radius,
                                  box_length_for_temperature, continuum_grid, discretize_continuum,
                                  energy_normalize, free_level_count, nearest_interior, select_by_temperature,
                                  thermal_continuum)
from polardimer.eigen import ContractedSolver, EigenState, RadialChannels, assemble
from polardimer.model import free_pair
from polardimer.radial import build_grid
from polardimer.transitions import transition_dipole
from polardimer.units import temperature_to_energy

MU = 1000.0


def free_box(L, N, J_max=0):
    g = build_grid(0.0, L, N, mu=MU)
    return g, assemble(g, AngularBasis(0, J_max), free_pair(MU), 0.0)


def ladder(energies):
    return [EigenState(float(e), 0, 0.0, np.array([0]), None, False, _coefficients=np.ones((1, 1)))
            for e in energies]


def test_free_box_energies():
    L = 80.0
    g, H = free_box(L, 400)
    states = discretize_continuum(H, (0.0, 0.02))
    n = np.arange(1, len(states) + 1)
    assert np.allclose([s.energy for s in states], n**2 * np.pi**2 / (2 * MU * L**2), rtol=1e-8)
    assert all(np.sum(s.coefficients**2) == pytest.approx(1.0, abs=1e-12) for s in states)


@pytest.mark.parametrize("window", [(0.001, 0.004), (0.0005, 0.02)])
def test_level_count_matches_density_of_states(window):
    L = 100.0
    _, H = free_box(L, 500)
    count = len(discretize_continuum(H, window))
    expected = free_level_count(MU, L, window[1]) - free_level_count(MU, L, window[0])
    assert abs(count - expected) <= 1


def test_doubling_box_doubles_level_count():
    window = (0.001, 0.01)
    a = len(discretize_continuum(free_box(60.0, 300)[1], window))
    b = len(discretize_continuum(free_box(120.0, 600)[1], window))
    assert abs(b - 2 * a) <= 1


def test_empty_window_raises():
    _, H = free_box(20.0, 60)
    with pytest.raises(ContinuumWindowError, match="enlarge the box"):
        discretize_continuum(H, (1e-9, 2e-9))
    with pytest.raises(ValueError):
        discretize_continuum(H, (0.1, 0.05))


@given(st.floats(1e-4, 1.0), st.integers(3, 30))
def test_uniform_spacing_normalization(d, n):
    states = ladder(d * np.arange(1, n + 1))
    for i in range(1, n - 1):
        assert energy_normalize(states, i).normalization == pytest.approx(1 / math.sqrt(d), rel=1e-12)
    for bad in (0, n - 1):
        with pytest.raises(ValueError):
            energy_normalize(states, bad)


def test_nearest_selection():
    d = 1e-3
    states = ladder(d * np.array([1, 2, 3, 4]))
    assert nearest_interior([s.energy for s in states], 2.4 * d) == 1
    with pytest.raises(ContinuumWindowError, match="outside"):
        nearest_interior([s.energy for s in states], 3.9 * d)


@given(st.floats(1e-7, 1e-5))
def test_selected_level_within_one_spacing(T):
    L = box_length_for_temperature(MU, T, 20)
    k = np.arange(1, 60)
    states = ladder(k**2 * np.pi**2 / (2 * MU * L**2))
    c = select_by_temperature(states, T)
    assert abs(c.energy - temperature_to_energy(T)) < 2 * c.level_spacing
    assert c.partial_wave_weights.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("L,N", [(100.0, 1200), (70.0, 840), (130.0, 1560)])
def test_energy_normalized_free_wave_overlap(L, N):
    # |<E|w>|^2 for a Gaussian w against sqrt(2 mu / (pi k)) sin(k R)
    x0, s = 4.0, 0.4
    g, H = free_box(L, N)
    states = discretize_continuum(H, (0.0, 0.05))
    w = np.exp(-((g.points - x0) ** 2) / (2 * s * s)) * np.sqrt(g.weights)
    for E in (0.001, 0.008, 0.03):
        c = energy_normalize(states, nearest_interior([t.energy for t in states], E))
        k = math.sqrt(2 * MU * c.energy)
        exact = 2 * MU / (math.pi * k) * 2 * math.pi * s**2 * math.exp(-(k * s) ** 2) * math.sin(k * x0) ** 2
        assert (c.normalization * np.sum(c.coefficients[:, 0] * w)) ** 2 == pytest.approx(exact, rel=0.01)


def test_halving_box_scales_unit_norm_overlaps():
    x0, s, E = 2.0, 0.5, 0.002
    results = []
    for L, N in ((120.0, 960), (60.0, 480)):
        g, H = free_box(L, N)
        states = discretize_continuum(H, (0.0, 0.01))
        w = np.exp(-((g.points - x0) ** 2) / (2 * s * s)) * np.sqrt(g.weights)
        ladder_E = np.array([t.energy for t in states])
        raw = np.array([np.sum(t.coefficients[:, 0] * w) ** 2 for t in states])
        normed = np.array([energy_normalize(states, i).normalization ** 2 * raw[i]
                           for i in range(1, len(states) - 1)])
        results.append((np.interp(E, ladder_E, raw), np.interp(E, ladder_E[1:-1], normed)))
    (raw_big, norm_big), (raw_small, norm_small) = results
    assert math.sqrt(raw_small / raw_big) == pytest.approx(math.sqrt(2), rel=0.02)
    assert norm_small == pytest.approx(norm_big, rel=0.01)


def test_field_free_continuum_is_single_partial_wave(scaled_curve):
    T = 1e-4
    g = continuum_grid(scaled_curve, T, ContinuumBoxSettings(levels_below_2kT=12))
    solver = ContractedSolver(RadialChannels(g, scaled_curve, 3), 0)
    states = discretize_continuum(solver, (1e-12, 3 * temperature_to_energy(T)), F=0.0)
    conts = thermal_continuum(states, g, scaled_curve, T)
    assert sorted(c.asymptotic_J for c in conts) == [0, 1, 2, 3]
    for c in conts:
        assert c.partial_wave_weights[c.asymptotic_J] == pytest.approx(1.0, abs=1e-12)
        assert c.energy > 0 and c.normalization > 0


def test_bound_continuum_element_independent_of_box(lics_curve):
    T = 1e-5
    kT = temperature_to_energy(T)
    values = []
    for levels in (14, 20, 26):
        g = continuum_grid(lics_curve, T, ContinuumBoxSettings(levels_below_2kT=levels))
        states = ContractedSolver(RadialChannels(g, lics_curve, 2), 0).solve(0.0)
        bound = next(s for s in states if s.label == (57, 0, 0))
        p_wave = asymptotic_ladders([s for s in states if s.energy > 0], g, asymptotic_radius(g, lics_curve))[1]
        E, f = [], []
        for i in range(1, len(p_wave) - 1):
            c = energy_normalize(p_wave, i)
            E.append(c.energy)
            f.append((c.normalization * transition_dipole(c.state, bound, g, lics_curve)) ** 2)
        values.append(np.interp(kT, E, f))
    assert max(values) / min(values) - 1 < 0.01


def test_box_length_recipe():
    L = box_length_for_temperature(MU, 1e-5, 20)
    assert free_level_count(MU, L, 2 * temperature_to_energy(1e-5)) == pytest.approx(20.0, rel=1e-12)
    with pytest.raises(ValueError):
        continuum_grid(free_pair(MU), 0.0)
