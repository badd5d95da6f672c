"""Sine discrete variable representation for the internuclear distance.

The radial function u(R) = R psi(R) is expanded in particle-in-a-box sine
functions of a coordinate x in [0, L] mapped onto [R_min, R_max].  With the
uniform mapping x = R - R_min this is the standard sine DVR.  The envelope
mapping places points with a local density proportional to the semiclassical
momentum sqrt(2 mu (E_cut - V_env(R))), where V_env(R) = min_{R' >= R} V(R')
is the monotone envelope of the potential.  V_env never exceeds the threshold,
so the density is clamped below by its threshold value sqrt(2 mu E_cut) and the
inner repulsive wall is sampled as densely as the bottom of the well.

For the mapped grid the kinetic operator is evaluated as a Galerkin integral
over the basis f(x) chi_j(x), f = J^(-1/2), J = dR/dx, which gives the
symmetric form J^(-1/2) d/dx J^(-1) d/dx J^(-1/2) and a positive semidefinite
matrix by construction.  Local operators stay diagonal (DVR approximation), so
<u|g|w> = sum_i u_i g(R_i) w_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import gaussian_filter1d

from polardimer.model import CurvePair


class GridResolutionError(ValueError):
    """The requested number of points cannot resolve the cut-off energy."""


@dataclass(frozen=True, eq=False)
class RadialGrid:
    points: np.ndarray
    jacobian: np.ndarray  # dR/dx at the points
    kinetic: np.ndarray
    r_min: float
    r_max: float
    mu: float
    mapping_kind: str = "uniform"
    e_cut: float | None = None
    spec: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.points.size

    @property
    def dx(self) -> float:
        return (self.r_max - self.r_min) / (self.N + 1)

    @property
    def weights(self) -> np.ndarray:
        """Effective quadrature weights dR_i = J_i dx; u(R_i) = c_i / sqrt(weights_i)."""
        return self.jacobian * self.dx

    def wavefunction(self, coefficients) -> np.ndarray:
        """Radial function values u(R_i) from DVR coefficients."""
        return np.asarray(coefficients) / np.sqrt(self.weights)


def _sine_transform(n: int) -> np.ndarray:
    """Orthogonal symmetric DST-I matrix, U[k, j] = sqrt(2/(n+1)) sin(k j pi/(n+1))."""
    k = np.arange(1, n + 1)
    return np.sqrt(2.0 / (n + 1)) * np.sin(np.outer(k, k) * np.pi / (n + 1))


def sine_dvr_kinetic(n: int, length: float, mu: float) -> np.ndarray:
    """Kinetic matrix of the sine DVR on a box of ``length`` with ``n`` interior points."""
    U = _sine_transform(n)
    kn = np.arange(1, n + 1) * np.pi / length
    T = (U * (kn**2 / (2.0 * mu))) @ U
    return 0.5 * (T + T.T)


def uniform_grid(r_min: float, r_max: float, n: int, mu: float) -> RadialGrid:
    L = r_max - r_min
    dx = L / (n + 1)
    pts = r_min + dx * np.arange(1, n + 1)
    return RadialGrid(pts, np.ones(n), sine_dvr_kinetic(n, L, mu), r_min, r_max, mu, "uniform",
                      spec={"r_min": r_min, "r_max": r_max, "n": n, "mapping": "uniform"})


def _fine_mesh(r_min: float, r_max: float, n_lin: int = 6000, n_geo: int = 3000) -> tuple[np.ndarray, int]:
    """Uniform mesh over the short-range region, geometric beyond; returns (mesh, n_uniform)."""
    r_split = min(r_max, max(r_min + 60.0, 4.0 * r_min))
    lin = np.linspace(r_min, r_split, n_lin)
    if r_split >= r_max:
        return lin, n_lin
    geo = np.geomspace(r_split, r_max, n_geo)
    return np.concatenate([lin, geo[1:]]), n_lin


def _envelope_density(curve: CurvePair, mesh: np.ndarray, n_lin: int, e_cut: float,
                      smooth: float = 0.25, l_res: float = 0.0) -> np.ndarray:
    V = curve.potential(mesh) - curve.dissociation_energy
    V_env = np.minimum.accumulate(V[::-1])[::-1]
    V_env = np.minimum(V_env, 0.0)
    # the envelope is only C1 where it detaches from V; smooth over `smooth` bohr
    # on the uniform part of the mesh so the mapping Jacobian is C-infinity in practice
    h = mesh[1] - mesh[0]
    if smooth > 0 and n_lin > 10:
        V_env[:n_lin] = gaussian_filter1d(V_env[:n_lin], smooth / h, mode="nearest")
    rho2 = 2.0 * curve.reduced_mass * (e_cut - V_env)
    if l_res > 0:
        rho2 = rho2 + ((l_res + 0.5) / mesh) ** 2
    return np.sqrt(rho2)


def _required_points(curve: CurvePair, r_min: float, r_max: float, e_cut: float, mapping: str,
                     l_res: float = 0.0) -> float:
    """Minimum N (Nyquist: one point per half local wavelength at E_cut)."""
    mesh, n_lin = _fine_mesh(r_min, r_max)
    V = curve.potential(mesh) - curve.dissociation_energy
    p = np.sqrt(2.0 * curve.reduced_mass * np.maximum(e_cut - V, 0.0))
    if mapping == "uniform":
        return (r_max - r_min) * p.max() / np.pi - 1
    rho = _envelope_density(curve, mesh, n_lin, e_cut, l_res=l_res)
    total = np.trapezoid(rho, mesh)
    return total * np.max(p / rho) / np.pi - 1


def recommended_points(curve: CurvePair, r_min: float, r_max: float, e_cut: float,
                       mapping: str = "envelope", oversampling: float = 1.6, l_res: float = 0.0) -> int:
    """Grid size giving ``oversampling`` times the Nyquist minimum at E_cut."""
    return int(np.ceil(oversampling * (_required_points(curve, r_min, r_max, e_cut, mapping, l_res) + 1)))


def build_grid(r_min: float, r_max: float, n: int, mapping: str = "uniform",
               curve: CurvePair | None = None, e_cut: float | None = None,
               mu: float | None = None, quad_order: int = 8, l_res: float = 0.0) -> RadialGrid:
    """Construct a uniform or envelope-mapped sine-DVR grid.

    ``e_cut`` is the highest energy (relative to threshold) the grid must
    resolve; when given, a Nyquist check rejects grids that are too coarse.
    ``l_res`` (envelope mapping only) adds (l_res + 1/2)^2 / R^2 to the squared
    local momentum, so centrifugal tunnelling regions of partial waves up to
    about l_res stay resolved where the envelope density alone is flat.
    """
    if not r_min < r_max:
        raise ValueError(f"need r_min < r_max, got {r_min} >= {r_max}")
    if n < 8:
        raise ValueError(f"need at least 8 grid points, got {n}")
    if mu is None:
        if curve is None:
            raise ValueError("either a curve or an explicit reduced mass is required")
        mu = curve.reduced_mass
    if curve is not None and not curve.covers(r_min, r_max):
        raise ValueError(f"curve domain [{curve.r_min}, {curve.r_max}] does not cover the box")

    if mapping == "uniform":
        if curve is not None and e_cut is not None:
            need = _required_points(curve, r_min, r_max, e_cut, "uniform")
            if n < need:
                raise GridResolutionError(
                    f"{n} uniform points cannot resolve E_cut={e_cut:g}; need at least {int(np.ceil(need))}")
        grid = uniform_grid(r_min, r_max, n, mu)
        return RadialGrid(grid.points, grid.jacobian, grid.kinetic, r_min, r_max, mu, "uniform", e_cut,
                          spec={"r_min": r_min, "r_max": r_max, "n": n, "mapping": "uniform", "e_cut": e_cut})
    if mapping != "envelope":
        raise ValueError(f"unknown mapping {mapping!r}")
    if curve is None or e_cut is None:
        raise ValueError("envelope mapping needs a curve and E_cut")
    Vmin = np.min(curve.potential(_fine_mesh(r_min, r_max)[0]) - curve.dissociation_energy)
    if e_cut <= Vmin:
        raise ValueError("E_cut must lie above the potential minimum")
    need = _required_points(curve, r_min, r_max, e_cut, "envelope", l_res)
    if n < need:
        raise GridResolutionError(
            f"{n} mapped points cannot resolve E_cut={e_cut:g}; need at least {int(np.ceil(need))}")
    return _mapped_grid(curve, r_min, r_max, n, e_cut, mu, quad_order, l_res)


def _mapped_grid(curve, r_min, r_max, n, e_cut, mu, quad_order, l_res=0.0) -> RadialGrid:
    mesh, n_lin = _fine_mesh(r_min, r_max)
    rho = CubicSpline(mesh, _envelope_density(curve, mesh, n_lin, e_cut, l_res=l_res))
    g = rho.antiderivative()
    G = float(g(r_max))
    L = r_max - r_min
    # x(R) = L g(R)/G, dx/dR = L rho/G
    g_mesh = g(mesh)

    def R_of_x(x):
        target = np.asarray(x) * G / L
        R = np.interp(target, g_mesh, mesh)
        for _ in range(4):
            R = R - (g(R) - target) / rho(R)
            R = np.clip(R, r_min, r_max)
        return R

    dx = L / (n + 1)
    x_pts = dx * np.arange(1, n + 1)
    R_pts = R_of_x(x_pts)
    jac_pts = G / (L * rho(R_pts))

    # composite Gauss-Legendre, one panel per DVR interval
    gx, gw = np.polynomial.legendre.leggauss(quad_order)
    edges = dx * np.arange(n + 2)
    xq = (0.5 * (edges[:-1, None] + edges[1:, None]) + 0.5 * dx * gx[None, :]).ravel()
    wq = np.tile(0.5 * dx * gw, n + 1)
    Rq = R_of_x(xq)
    rq = rho(Rq)
    drq = rho(Rq, 1)
    Jq = G / (L * rq)
    f = np.sqrt(L * rq / G)
    fprime = np.sqrt(L / G) * drq / (2.0 * np.sqrt(rq)) * Jq  # df/dx
    k = np.arange(1, n + 1) * np.pi / L
    arg = np.outer(xq, k)
    s = np.sqrt(2.0 / L) * np.sin(arg)
    ds = np.sqrt(2.0 / L) * np.cos(arg) * k
    A = fprime[:, None] * s + f[:, None] * ds
    K = (A * (wq / Jq)[:, None]).T @ A / (2.0 * mu)
    U = _sine_transform(n)
    T = U @ K @ U
    T = 0.5 * (T + T.T)
    spec = {"r_min": r_min, "r_max": r_max, "n": n, "mapping": "envelope", "e_cut": e_cut, "l_res": l_res}
    return RadialGrid(R_pts, jac_pts, T, r_min, r_max, mu, "envelope", e_cut, spec=spec)


def radial_overlap(grid: RadialGrid, f, u, w) -> float:
    """sum_i u_i f(R_i) w_i; ``f`` may be a callable, an array on the grid, or None for 1."""
    u = np.asarray(u)
    w = np.asarray(w)
    if u.shape[0] != grid.N or w.shape[0] != grid.N:
        raise ValueError(f"vectors must have length {grid.N}, got {u.shape[0]} and {w.shape[0]}")
    if f is None:
        vals = 1.0
    elif callable(f):
        vals = f(grid.points)
    else:
        vals = np.asarray(f)
    return float(np.sum(u * vals * w))
