"""Box-discretized continuum and its energy normalization.

Above threshold the finite box turns the continuum into a ladder of unit-norm
levels.  A box level is converted to an energy-normalized continuum function
by the local density of states of its ladder, rho = 2 / (E_{i+1} - E_{i-1}).

With a field on, levels of different outgoing partial waves interleave in one
spectrum.  Each level is therefore assigned to the partial wave that carries
most of its norm beyond the coupling region (``asymptotic_ladders``); the
density of states is taken within that ladder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from polardimer.eigen import ContractedSolver, EigenState, HamiltonianMatrix, states_from_eigenpairs
from polardimer.model import CurvePair
from polardimer.radial import RadialGrid, build_grid, recommended_points
from polardimer.units import temperature_to_energy


class ContinuumWindowError(ValueError):
    """No usable box level where one was requested."""


@dataclass(eq=False)
class ContinuumState:
    state: EigenState
    normalization: float
    partial_wave_weights: np.ndarray  # norm fraction per J of the whole state
    asymptotic_J: int | None = None
    level_spacing: float = math.nan

    @property
    def energy(self) -> float:
        return self.state.energy

    @property
    def coefficients(self) -> np.ndarray:
        return self.state.coefficients

    @property
    def js(self) -> np.ndarray:
        return self.state.js


def discretize_continuum(H: HamiltonianMatrix | ContractedSolver, E_window: tuple[float, float],
                         F: float | None = None) -> list[EigenState]:
    """All box levels with energies in ``E_window``, unit-normalized and sorted.

    ``H`` is either an assembled Hamiltonian (diagonalized densely) or a
    contracted solver, which then needs the field ``F``.
    """
    lo, hi = E_window
    if not 0.0 <= lo < hi:
        raise ValueError(f"need 0 <= E_lo < E_hi, got {E_window}")
    if isinstance(H, ContractedSolver):
        if F is None:
            raise ValueError("a contracted solver needs the field strength")
        states = H.solve(F, e_range=(lo, hi)) if F != 0.0 else [
            s for s in H.solve(0.0) if lo <= s.energy <= hi]
    else:
        vals, vecs = sla.eigh(H.toarray(), subset_by_value=(lo, hi))
        states = states_from_eigenpairs(H, vals, vecs)
    states = [s for s in states if lo <= s.energy <= hi]
    if not states:
        raise ContinuumWindowError(
            f"no box levels in [{lo:.3e}, {hi:.3e}] a.u.; enlarge the box or widen the window")
    return sorted(states, key=lambda s: s.energy)


def energy_normalize(states: Sequence[EigenState], index: int) -> ContinuumState:
    """Energy-normalize the interior level ``index`` of an ordered ladder."""
    if not 0 < index < len(states) - 1:
        raise ValueError(f"index {index} has no neighbour on both sides (ladder of {len(states)})")
    e = [s.energy for s in states]
    if not e[index - 1] < e[index] < e[index + 1]:
        raise ValueError("ladder must be strictly increasing in energy")
    spacing = 0.5 * (e[index + 1] - e[index - 1])
    s = states[index]
    w = s.j_weights
    return ContinuumState(s, math.sqrt(1.0 / spacing), w / np.sum(w), level_spacing=spacing)


def nearest_interior(energies: Sequence[float], target: float) -> int:
    e = np.asarray(energies, dtype=float)
    if e.size < 3:
        raise ContinuumWindowError("need at least three levels to pick an interior one")
    if not e[1] <= target <= e[-2]:
        raise ContinuumWindowError(
            f"target energy {target:.3e} outside the interior range [{e[1]:.3e}, {e[-2]:.3e}] a.u.")
    return 1 + int(np.argmin(np.abs(e[1:-1] - target)))


def select_by_temperature(states: Sequence[EigenState], T: float) -> ContinuumState:
    """Energy-normalized interior level nearest kB T."""
    target = temperature_to_energy(T)
    states = sorted(states, key=lambda s: s.energy)
    return energy_normalize(states, nearest_interior([s.energy for s in states], target))


def asymptotic_radius(grid: RadialGrid, curve: CurvePair, rel_tol: float = 1e-6) -> float:
    """Radius beyond which both the dipole and the potential are negligible."""
    R = grid.points
    V, D = curve.evaluate(R)
    V = np.abs(V - curve.dissociation_energy)
    D = np.abs(D)
    active = (D > rel_tol * D.max()) | (V > rel_tol * V.max())
    r_last = R[np.nonzero(active)[0][-1]] if active.any() else R[0]
    return 1.5 * float(r_last)


def outer_partial_wave(state: EigenState, grid: RadialGrid, r_asym: float) -> int:
    outer = grid.points > r_asym
    if not outer.any():
        raise ValueError("asymptotic radius lies beyond the box")
    return int(state.js[np.argmax(np.sum(state.coefficients[outer] ** 2, axis=0))])


def asymptotic_ladders(states: Sequence[EigenState], grid: RadialGrid, r_asym: float) -> dict[int, list[EigenState]]:
    """Split above-threshold levels into ladders by their dominant outer partial wave."""
    ladders: dict[int, list[EigenState]] = {}
    for s in sorted(states, key=lambda s: s.energy):
        if s.energy <= 0:
            continue
        ladders.setdefault(outer_partial_wave(s, grid, r_asym), []).append(s)
    return ladders


def thermal_continuum(states: Sequence[EigenState], grid: RadialGrid, curve: CurvePair, T: float,
                      r_asym: float | None = None) -> list[ContinuumState]:
    """One energy-normalized level per outgoing partial wave, each nearest kB T.

    Ladders without an interior level bracketing kB T are skipped; at least
    one ladder must qualify.
    """
    target = temperature_to_energy(T)
    if r_asym is None:
        r_asym = asymptotic_radius(grid, curve)
    out = []
    for J, ladder in sorted(asymptotic_ladders(states, grid, r_asym).items()):
        try:
            idx = nearest_interior([s.energy for s in ladder], target)
        except ContinuumWindowError:
            continue
        c = energy_normalize(ladder, idx)
        c.asymptotic_J = J
        out.append(c)
    if not out:
        raise ContinuumWindowError(f"no partial-wave ladder brackets kB T = {target:.3e} a.u.")
    return out


def free_level_count(mu: float, length: float, E: float) -> float:
    """Number of free-particle box levels below E (continuous estimate)."""
    return length * math.sqrt(2.0 * mu * E) / math.pi


def box_length_for_temperature(mu: float, T: float, levels: int = 20) -> float:
    """Box length holding ``levels`` free levels below 2 kB T."""
    return levels * math.pi / math.sqrt(2.0 * mu * 2.0 * temperature_to_energy(T))


@dataclass(frozen=True)
class ContinuumBoxSettings:
    """Grid recipe for a temperature-specific continuum box."""

    r_min: float = 3.0
    levels_below_2kT: int = 20
    cut_factor: float = 4.0  # E_cut = cut_factor * kB T
    l_res: float = 20.0
    oversampling: float = 1.6


def continuum_grid(curve: CurvePair, T: float, settings: ContinuumBoxSettings = ContinuumBoxSettings()) -> RadialGrid:
    """Envelope-mapped grid whose box resolves the thermal continuum at temperature T."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    L = box_length_for_temperature(curve.reduced_mass, T, settings.levels_below_2kT)
    e_cut = settings.cut_factor * temperature_to_energy(T)
    r_max = settings.r_min + L
    n = recommended_points(curve, settings.r_min, r_max, e_cut, "envelope", settings.oversampling, settings.l_res)
    return build_grid(settings.r_min, r_max, n, mapping="envelope", curve=curve, e_cut=e_cut, l_res=settings.l_res)
