"""Potential energy and dipole moment curves.

Energies are measured from the dissociation threshold, so the continuum starts
at E = 0 and bound levels are negative.  A :class:`CurvePair` bundles the two
curves with the reduced mass of the nuclei.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from polardimer.units import reduced_mass

MASS_LI7_U = 7.0160034366
MASS_CS133_U = 132.905451961
MU_LICS = reduced_mass(MASS_LI7_U, MASS_CS133_U)

Curve = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MorseParams:
    D_e: float
    a: float
    R_e: float

    def __post_init__(self):
        if not (self.D_e > 0 and self.a > 0 and self.R_e > 0):
            raise ValueError(f"Morse parameters must be positive, got {self}")

    def harmonic_frequency(self, mu: float) -> float:
        return self.a * math.sqrt(2.0 * self.D_e / mu)

    def well_parameter(self, mu: float) -> float:
        """lambda = sqrt(2 mu D_e)/a; the well holds floor(lambda - 1/2) + 1 levels."""
        return math.sqrt(2.0 * mu * self.D_e) / self.a


@dataclass(frozen=True, eq=False)
class CurvePair:
    """Potential epsilon(R) and dipole D(R) on the domain [r_min, r_max]."""

    potential: Curve
    dipole: Curve
    reduced_mass: float
    r_min: float = 0.0
    r_max: float = math.inf
    dissociation_energy: float = 0.0
    name: str = ""
    meta: dict = field(default_factory=dict)

    def _check(self, R: np.ndarray) -> None:
        if np.any(R < self.r_min) or np.any(R > self.r_max) or not np.all(np.isfinite(R)):
            raise ValueError(
                f"R outside curve domain [{self.r_min}, {self.r_max}] "
                f"(got min {np.min(R)}, max {np.max(R)})"
            )

    def evaluate(self, R):
        R = np.asarray(R, dtype=float)
        self._check(R)
        return self.potential(R), self.dipole(R)

    def covers(self, r_lo: float, r_hi: float) -> bool:
        return self.r_min <= r_lo and r_hi <= self.r_max


def evaluate(curve: CurvePair, R):
    """Return ``(energy, dipole)`` at ``R``; raises outside the curve domain."""
    return curve.evaluate(R)


def morse_potential(p: MorseParams) -> Curve:
    def V(R):
        y = np.exp(-p.a * (np.asarray(R, dtype=float) - p.R_e))
        return p.D_e * (y * y - 2.0 * y)

    return V


def morse_levels(p: MorseParams, mu: float, vmax: int | None = None) -> np.ndarray:
    """Analytic J=0 Morse levels, measured from the dissociation threshold."""
    count = morse_level_count(p, mu)
    v = np.arange(count if vmax is None else min(vmax + 1, count))
    w = p.harmonic_frequency(mu)
    return -p.D_e + w * (v + 0.5) - w**2 * (v + 0.5) ** 2 / (4.0 * p.D_e)


def morse_level_count(p: MorseParams, mu: float) -> int:
    return int(math.floor(p.well_parameter(mu) - 0.5)) + 1


def harmonic_potential(k: float, R_e: float, depth: float) -> Curve:
    """0.5 k (R - R_e)^2 - depth; not dissociative, only for oracle tests."""

    def V(R):
        return 0.5 * k * (np.asarray(R, dtype=float) - R_e) ** 2 - depth

    return V


def constant_curve(value: float = 0.0) -> Curve:
    def f(R):
        return np.full(np.shape(R), float(value))

    return f


def dipole_bump(d_max: float, r_peak: float, power: float = 4.0) -> Curve:
    """d_max (R/r_peak)^p exp(p (1 - R/r_peak)): one interior maximum, zero at 0 and infinity."""

    def D(R):
        x = np.asarray(R, dtype=float) / r_peak
        return d_max * x**power * np.exp(power * (1.0 - x))

    return D


def morse_pair(params: MorseParams, mu: float, dipole: Curve | None = None, name: str = "morse") -> CurvePair:
    return CurvePair(
        potential=morse_potential(params),
        dipole=dipole if dipole is not None else constant_curve(0.0),
        reduced_mass=mu,
        name=name,
        meta={"morse": params},
    )


def free_pair(mu: float, dipole: Curve | None = None) -> CurvePair:
    """V = 0 everywhere; the reference problem for box-continuum tests."""
    return CurvePair(constant_curve(0.0), dipole or constant_curve(0.0), mu, name="free")


# LiCs X 1Sigma+ spectroscopic scale: De ~ 5875 cm-1, we ~ 184 cm-1, Re ~ 3.67 A.
# we is set so the Morse well parameter 2 De/we is exactly 64: the last level
# then lies midway between two threshold crossings instead of accidentally
# close to E = 0, where its J = 1 partner would be a p-wave shape resonance.
_CM = 4.556335252912e-6  # hartree per cm-1
LICS_DE = 5875.0 * _CM
LICS_WELL_PARAMETER = 64.0
LICS_WE = 2.0 * LICS_DE / LICS_WELL_PARAMETER
LICS_RE = 6.93
LICS_DIPOLE_MAX = 2.35
LICS_DIPOLE_PEAK = 7.6


def synthetic_lics(scale: float = 1.0) -> CurvePair:
    """LiCs-like Morse potential with a bump-shaped dipole function.

    This is a synthetic stand-in with the right energy scales, not the
    experimental curve.  ``scale`` divides the reduced mass: scale=16 yields a
    lighter "scaled" molecule with 4x fewer vibrational levels and 16x larger
    rotational constant, used to keep full cascades cheap.
    """
    mu = MU_LICS / scale
    a = LICS_WE * math.sqrt(MU_LICS / (2.0 * LICS_DE))
    params = MorseParams(D_e=LICS_DE, a=a, R_e=LICS_RE)
    return CurvePair(
        potential=morse_potential(params),
        dipole=dipole_bump(LICS_DIPOLE_MAX, LICS_DIPOLE_PEAK),
        reduced_mass=mu,
        name="synthetic_lics" if scale == 1.0 else f"synthetic_lics/{scale:g}",
        meta={"morse": params, "scale": scale},
    )


class TabulatedCurve:
    """Cubic spline through tabulated points plus an analytic long-range tail.

    The spline uses not-a-knot end conditions, so it is exact on cubic
    polynomials (natural end conditions are not).

    ``kind='potential'``: beyond the last knot V(R) = E_thr - C6/R^6 - C8/R^8 with
    C6, C8 fixed by matching value and slope at the last knot.
    ``kind='dipole'``: D(R) = D_N exp(-k (R - R_N)), k matched to the slope; if
    the tabulated dipole is not decaying at the last knot a unit decay constant
    is used and a warning issued.
    """

    def __init__(self, R, values, kind: str = "potential", threshold: float = 0.0):
        R = np.asarray(R, dtype=float)
        values = np.asarray(values, dtype=float)
        if R.ndim != 1 or R.shape != values.shape:
            raise ValueError("R and values must be 1-D arrays of equal length")
        if R.size < 4:
            raise ValueError(f"need at least 4 points for a cubic spline, got {R.size}")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(values))):
            raise ValueError("tabulated values must be finite")
        if np.any(np.diff(R) <= 0):
            raise ValueError("R must be strictly increasing")
        if kind not in ("potential", "dipole"):
            raise ValueError(f"kind must be 'potential' or 'dipole', got {kind!r}")
        self.kind = kind
        self.threshold = threshold
        self.knots = R
        self.values = values
        self.spline = CubicSpline(R, values, bc_type="not-a-knot")
        self.r_first = R[0]
        self.r_last = R[-1]
        v_n = float(values[-1])
        dv_n = float(self.spline(self.r_last, 1))
        if kind == "potential":
            # V = thr - C6 x^6 - C8 x^8 with x = 1/R
            r = self.r_last
            a = np.array([[r**-6, r**-8], [-6 * r**-7, -8 * r**-9]])
            rhs = np.array([threshold - v_n, -dv_n])
            self.c6, self.c8 = np.linalg.solve(a, rhs)
            if self.c6 < 0:
                warnings.warn("tabulated potential tail has C6 < 0 (repulsive long range)", stacklevel=2)
        else:
            if v_n != 0.0 and -dv_n / v_n > 0:
                self.decay = -dv_n / v_n
            else:
                self.decay = 1.0
                if abs(v_n) > 1e-3:
                    warnings.warn("tabulated dipole does not decay at the last knot; "
                                  "using unit exponential decay", stacklevel=2)
            self.d_last = v_n

    def __call__(self, R):
        R = np.asarray(R, dtype=float)
        if np.any(R < self.r_first):
            raise ValueError(f"R below first tabulated point {self.r_first}")
        inner = R <= self.r_last
        out = np.empty_like(R)
        out[inner] = self.spline(R[inner])
        Ro = R[~inner]
        if self.kind == "potential":
            out[~inner] = self.threshold - self.c6 / Ro**6 - self.c8 / Ro**8
        else:
            out[~inner] = self.d_last * np.exp(-self.decay * (Ro - self.r_last))
        return out if out.ndim else float(out)


def load_tabulated(points, kind: str = "potential", threshold: float = 0.0) -> TabulatedCurve:
    """Build an interpolant from ``(R, value)`` pairs."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("points must be a sequence of (R, value) pairs")
    return TabulatedCurve(arr[:, 0], arr[:, 1], kind=kind, threshold=threshold)


def read_curve_file(path: str | Path) -> np.ndarray:
    """Read a two-column text file (R in bohr, value in a.u.); '#' starts a comment."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected two columns, got {len(parts)}")
        rows.append((float(parts[0]), float(parts[1])))
    return np.array(rows, dtype=float).reshape(-1, 2)


def tabulated_pair(potential_file, dipole_file, mu: float, threshold: float = 0.0,
                   name: str = "tabulated", asymptote_tol: float = 1e-4) -> CurvePair:
    pot = load_tabulated(read_curve_file(potential_file), "potential", threshold)
    dip = load_tabulated(read_curve_file(dipole_file), "dipole")
    if abs(pot.values[-1] - threshold) > asymptote_tol * max(1.0, abs(pot.values.min() - threshold)):
        warnings.warn("tabulated potential is far from threshold at its last point", stacklevel=2)
    if abs(dip.values[-1]) > 0.1 * np.max(np.abs(dip.values)):
        warnings.warn("tabulated dipole has not decayed towards zero at its last point", stacklevel=2)
    return CurvePair(pot, dip, mu, r_min=max(pot.r_first, dip.r_first), r_max=math.inf,
                     dissociation_energy=threshold, name=name)
