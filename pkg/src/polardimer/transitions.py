"""Stimulated-association cross sections, spontaneous-emission rates and lifetimes.

Dipole couplings between states of fixed M use D(R) cos(theta) for Delta M = 0
and D(R) sin(theta) for |Delta M| = 1.  For |Delta M| = 1 the rate carries a
factor 1/2: the spherical components d_(+-1) = -+ D sin(theta) e^(+-i phi)/sqrt(2)
are what couple to the radiation field, so summing over the three channels
reproduces the Hoenl-London total J/(2J+1) and lifetimes do not depend on M.

All quantities are in atomic units, where hbar = 1, 4 pi eps0 = 1 and
c = 1/alpha; lifetimes are additionally reported in seconds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from polardimer.angular import AngularBasis, cos_theta_elements, sin_theta_elements
from polardimer.continuum import (ContinuumBoxSettings, ContinuumState, continuum_grid,
                                  thermal_continuum)
from polardimer.eigen import (ContractedSolver, EigenState, LabelingError, RadialChannels,
                              advance_labels, scan_path)
from polardimer.model import CurvePair
from polardimer.radial import RadialGrid
from polardimer.units import (AU_TIME_S, BOHR_M, CONSTANTS, HARTREE_J, temperature_to_energy)

C_LIGHT = CONSTANTS.c
EPS0 = 1.0 / (4.0 * math.pi)
STIMULATED_PREFACTOR = math.pi / (C_LIGHT * EPS0)  # pi / (hbar c eps0)
SPONTANEOUS_PREFACTOR = 1.0 / (3.0 * math.pi * EPS0 * C_LIGHT**3)  # 1 / (3 pi eps0 hbar c^3)


@dataclass(frozen=True)
class CrossSectionPoint:
    F: float
    T: float
    target_label: tuple
    sigma: float
    continuum_energy: float
    photon_energy: float
    partial: dict = field(default_factory=dict)  # outgoing partial wave -> sigma


@dataclass(frozen=True)
class RateEntry:
    upper_label: tuple | None
    lower_label: tuple | None
    omega: float
    gamma: float
    channel: int  # M_lower - M_upper

    @property
    def tau_seconds(self) -> float:
        return math.inf if self.gamma == 0 else AU_TIME_S / self.gamma


# --- matrix elements -------------------------------------------------------

def _dipole_on_grid(grid: RadialGrid, curve: CurvePair) -> np.ndarray:
    return np.asarray(curve.dipole(grid.points), dtype=float)


def apply_dipole_cos(C: np.ndarray, M: int, J_max: int, dipole: np.ndarray) -> np.ndarray:
    """(D(R) cos theta) acting on a coefficient matrix (N, n_J)."""
    off = cos_theta_elements(AngularBasis(M, J_max))
    out = np.zeros_like(C)
    if C.shape[-1] > 1:
        out[..., 1:] += C[..., :-1] * off
        out[..., :-1] += C[..., 1:] * off
    return dipole[:, None] * out


def _angular_factor(M_upper: int, M_lower: int) -> float:
    dM = abs(M_lower - M_upper)
    if dM == 0:
        return 1.0
    if dM == 1:
        return 0.5
    raise ValueError(f"dipole transitions need |Delta M| <= 1, got M={M_upper} -> {M_lower}")


def _j_max(state: EigenState) -> int:
    return int(state.js[-1])


def dipole_matrix(bras: Sequence[EigenState], kets: Sequence[EigenState], dipole: np.ndarray) -> np.ndarray:
    """<bra|D f(theta)|ket> for all pairs; all bras share one M, all kets another.

    f = cos(theta) when the two M agree and sin(theta) when they differ by one.
    """
    if not bras or not kets:
        return np.zeros((len(bras), len(kets)))
    Mb, Mk = bras[0].M, kets[0].M
    J_max = _j_max(bras[0])
    if any(s.M != Mb for s in bras) or any(s.M != Mk for s in kets):
        raise ValueError("all bras (kets) must share one M")
    if any(_j_max(s) != J_max for s in list(bras) + list(kets)):
        raise ValueError("all states must use the same J_max")
    _angular_factor(Mb, Mk)
    B = np.stack([s.coefficients for s in bras])
    K = np.stack([s.coefficients for s in kets])
    if Mb == Mk:
        AK = apply_dipole_cos(K, Mk, J_max, dipole)
    else:
        A = sin_theta_elements(Mk, Mb, J_max)  # rows J of bra, columns J of ket
        AK = dipole[None, :, None] * (K @ A.T)
    return B.reshape(len(bras), -1) @ AK.reshape(len(kets), -1).T


def transition_dipole(bra: EigenState, ket: EigenState, grid: RadialGrid, curve: CurvePair) -> float:
    return float(dipole_matrix([bra], [ket], _dipole_on_grid(grid, curve))[0, 0])


# --- stimulated association ------------------------------------------------

def stimulated_cross_section(cont: ContinuumState, bound: EigenState, grid: RadialGrid,
                             curve: CurvePair, T: float = math.nan) -> CrossSectionPoint:
    """sigma = pi (E - E_b)/(hbar c eps0) |<E|D cos|b>|^2 with an energy-normalized continuum."""
    if cont.state.M != bound.M:
        raise ValueError(f"linear polarization along the field needs equal M, got {cont.state.M} and {bound.M}")
    if not bound.bound:
        raise ValueError("target state is not bound")
    dE = cont.energy - bound.energy
    if dE <= 0:
        raise ValueError("continuum energy must lie above the bound level")
    me = cont.normalization * transition_dipole(cont.state, bound, grid, curve)
    sigma = STIMULATED_PREFACTOR * dE * me**2
    return CrossSectionPoint(bound.F, T, bound.label, sigma, cont.energy, dE,
                             {cont.asymptotic_J: sigma})


def total_cross_section(conts: Sequence[ContinuumState], bound: EigenState, grid: RadialGrid,
                        curve: CurvePair, T: float = math.nan) -> CrossSectionPoint:
    """Sum of partial cross sections over outgoing partial-wave ladders.

    The reported continuum energy is that of the largest contribution.
    """
    points = [stimulated_cross_section(c, bound, grid, curve, T) for c in conts]
    total = float(sum(p.sigma for p in points))
    lead = max(points, key=lambda p: p.sigma)
    partial = {c.asymptotic_J: p.sigma for c, p in zip(conts, points)}
    return CrossSectionPoint(bound.F, T, bound.label, total, lead.continuum_energy, lead.photon_energy, partial)


# --- spontaneous emission --------------------------------------------------

def einstein_rate(omega, dipole_squared):
    """omega^3 |d|^2 / (3 pi eps0 hbar c^3)."""
    return SPONTANEOUS_PREFACTOR * np.asarray(omega) ** 3 * np.asarray(dipole_squared)


def spontaneous_rate(upper: EigenState, lower: EigenState, grid: RadialGrid, curve: CurvePair) -> RateEntry:
    if abs(upper.M - lower.M) > 1:
        raise ValueError(f"|Delta M| = {abs(upper.M - lower.M)} is dipole forbidden")
    omega = upper.energy - lower.energy
    if omega <= 0:
        raise ValueError("upper state must lie above the lower state")
    d = transition_dipole(upper, lower, grid, curve)
    gamma = float(einstein_rate(omega, _angular_factor(upper.M, lower.M) * d * d))
    return RateEntry(upper.label, lower.label, omega, gamma, lower.M - upper.M)


def rate_matrix(uppers: Sequence[EigenState], lowers: Sequence[EigenState], dipole: np.ndarray) -> np.ndarray:
    """Rates for every (upper, lower) pair with E_upper > E_lower, zero otherwise."""
    if not uppers or not lowers:
        return np.zeros((len(uppers), len(lowers)))
    d = dipole_matrix(uppers, lowers, dipole)
    omega = np.array([s.energy for s in uppers])[:, None] - np.array([s.energy for s in lowers])[None, :]
    factor = _angular_factor(uppers[0].M, lowers[0].M)
    return np.where(omega > 0, einstein_rate(np.maximum(omega, 0.0), factor * d * d), 0.0)


def lifetime(state: EigenState, lower_manifold: Sequence[EigenState], grid: RadialGrid,
             curve: CurvePair, truncation: float = 0.0) -> tuple[float, list[RateEntry]]:
    """Total radiative lifetime in seconds and the open decay channels.

    Only bound states below ``state`` with |Delta M| <= 1 count.  Without open
    channels the lifetime is infinite (returned as math.inf).
    """
    entries = [spontaneous_rate(state, low, grid, curve) for low in lower_manifold
               if low.bound and low.energy < state.energy and abs(low.M - state.M) <= 1]
    entries = [e for e in entries if e.gamma > 0]
    if entries and truncation > 0:
        top = max(e.gamma for e in entries)
        entries = [e for e in entries if e.gamma >= truncation * top]
    total = sum(e.gamma for e in entries)
    return (math.inf if total == 0 else AU_TIME_S / total), entries


# --- formation-rate estimate -----------------------------------------------

_CM = 1e-2 / BOHR_M  # bohr per cm


@dataclass(frozen=True)
class FormationEstimate:
    rate_per_second: float
    photon_flux_au: float
    pair_volume_au: float
    energy_width_au: float
    caveat: str = "order-of-magnitude estimate; depends on the pair-volume and energy-width conventions"


def thermal_de_broglie_volume(mu: float, T: float) -> float:
    """(2 pi hbar^2 / (mu kB T))^(3/2) in bohr^3."""
    return (2.0 * math.pi / (mu * temperature_to_energy(T))) ** 1.5


ENERGY_WIDTHS = ("atomic", "thermal")


def formation_rate(sigma: float, n1: float, n2: float, V: float, I: float, photon_energy: float,
                   T: float, mu: float, energy_width: str = "atomic") -> FormationEstimate:
    """Molecules per second, R = n1 n2 V sigma Phi V_pair.

    ``sigma`` in a.u. (as returned by the cross-section routines), densities in
    cm^-3, volume in cm^3, intensity in W/cm^2, photon energy in hartree, T in
    kelvin.  Phi = I / photon energy and V_pair is the thermal de Broglie volume
    of the relative motion.

    With an energy-normalized continuum sigma carries an inverse energy.
    ``energy_width='atomic'`` reads sigma directly as an area in bohr^2 (a
    width of one hartree); ``'thermal'`` multiplies by kB T, the width of a
    Boltzmann average over single-partial-wave pair states.
    """
    for name, val in (("sigma", sigma), ("n1", n1), ("n2", n2), ("V", V), ("I", I),
                      ("photon_energy", photon_energy), ("T", T), ("mu", mu)):
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")
    if energy_width not in ENERGY_WIDTHS:
        raise ValueError(f"energy_width must be one of {ENERGY_WIDTHS}")
    n1_au, n2_au = n1 / _CM**3, n2 / _CM**3
    V_au = V * _CM**3
    I_au = I * (AU_TIME_S / HARTREE_J) / _CM**2  # hartree per a.u. time per bohr^2
    flux = I_au / photon_energy
    v_pair = thermal_de_broglie_volume(mu, T)
    width = 1.0 if energy_width == "atomic" else temperature_to_energy(T)
    rate_au = n1_au * n2_au * V_au * sigma * flux * v_pair * width
    return FormationEstimate(rate_au / AU_TIME_S, flux, v_pair, width)


# --- cross-section scans ---------------------------------------------------

@dataclass(frozen=True)
class ScanSettings:
    J_max: int = 20
    box: ContinuumBoxSettings = ContinuumBoxSettings()
    label_steps: int = 64
    min_overlap: float = 0.5
    bound_window_factor: float = 5.0  # keep channel functions above factor * E(deepest target)
    continuum_ceiling_factor: float = 3.0  # solve up to this many kB T


@dataclass
class ScanResult:
    points: list[CrossSectionPoint]
    diagnostics: list[str]


def _match(reference: EigenState, candidates: Sequence[EigenState]) -> tuple[EigenState, float]:
    ref = reference.coefficients
    best, ov = None, -1.0
    for s in candidates:
        o = abs(float(np.sum(s.coefficients * ref)))
        if o > ov:
            best, ov = s, o
    return best, ov


def cross_section_scan(curve: CurvePair, F_values: Iterable[float], T_values: Iterable[float],
                       targets: Sequence[tuple], settings: ScanSettings = ScanSettings()) -> ScanResult:
    """sigma(F, T) for every labeled target, ordered by (T, F, target).

    For each temperature a box sized for that temperature is built; target
    labels are carried along the field path in the space of bound channel
    functions, then matched by overlap into the full field-dressed spectrum,
    which also provides the continuum.  A labeling failure truncates the scan
    for that (T, M) and is reported as a diagnostic.
    """
    F_values = sorted({float(F) for F in F_values})
    if not F_values:
        raise ValueError("empty field list")
    targets = [tuple(t) for t in targets]
    points: list[CrossSectionPoint] = []
    diags: list[str] = []
    for T in sorted(T_values):
        kT = temperature_to_energy(T)
        grid = continuum_grid(curve, T, settings.box)
        channels = RadialChannels(grid, curve, settings.J_max)
        for M in sorted({t[2] for t in targets}):
            tM = [t for t in targets if t[2] == M]
            e_floor = settings.bound_window_factor * min(channels.level(v, J) for v, J, _ in tM)
            full = ContractedSolver(channels.restrict(e_floor), M)
            bound_only = ContractedSolver(channels.restrict(e_floor, -channels.margin), M)
            current = [s for s in bound_only.solve(0.0) if s.label is not None]
            path = scan_path(F_values, settings.label_steps)
            F_prev = 0.0
            for F in path:
                if F > F_prev:
                    try:
                        current = advance_labels(bound_only.solve, current, F_prev, F, settings.min_overlap)
                    except LabelingError as err:
                        diags.append(f"T={T:g} K, M={M}: {err}")
                        break
                    F_prev = F
                if F not in F_values:
                    continue
                tracked = {s.label: s for s in current if s.label is not None}
                lo = min(tracked[t].energy for t in tM)
                lo -= 0.05 * abs(lo)
                spectrum = full.solve(F, e_range=(lo, settings.continuum_ceiling_factor * kT)) if F > 0 else [
                    s for s in full.solve(0.0) if lo <= s.energy <= settings.continuum_ceiling_factor * kT]
                conts = thermal_continuum([s for s in spectrum if s.energy > 0], grid, curve, T)
                bound_states = [s for s in spectrum if s.bound]
                for t in tM:
                    ref = tracked[t]
                    near = [s for s in bound_states if abs(s.energy - ref.energy) < 0.05 * abs(ref.energy)]
                    b, ov = _match(ref, near)
                    if b is None or ov < settings.min_overlap:
                        diags.append(f"T={T:g} K, F={F:g}: target {t} not found in the full spectrum")
                        continue
                    b = b.relabel(t)
                    points.append(total_cross_section(conts, b, grid, curve, T))
    return ScanResult(points, diags)


# --- exports ---------------------------------------------------------------

def _label_cols(label) -> list:
    return list(label) if label is not None else ["", "", ""]


def write_rate_csv(path: str | Path, entries: Iterable[RateEntry]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["v", "J", "M", "v_prime", "J_prime", "M_prime", "omega_au", "gamma_au", "tau_channel_s"])
        for e in entries:
            w.writerow(_label_cols(e.upper_label) + _label_cols(e.lower_label)
                       + [repr(e.omega), repr(e.gamma), repr(e.tau_seconds)])


def write_scan_csv(path: str | Path, points: Iterable[CrossSectionPoint]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["F_au", "T_K", "v", "J", "M", "sigma_au", "E_cont_au"])
        for p in points:
            w.writerow([repr(p.F), repr(p.T)] + _label_cols(p.target_label) + [repr(p.sigma), repr(p.continuum_energy)])
