"""Field-dressed rovibrational Hamiltonian at fixed M and its eigenstates.

The product basis is (radial DVR point i) x (rotational J = |M|..J_max), with
flat index i * n_J + (J - |M|).  The Hamiltonian is

    T_ii' delta_JJ' + [eps(R_i) + J(J+1)/(2 mu R_i^2)] delta_ii' delta_JJ'
        - F D(R_i) <J'M|cos theta|JM> delta_ii'

Two solution routes share this matrix:

* :func:`solve_bound` runs Lanczos directly on the product basis (or dense
  diagonalization for small problems);
* :class:`ContractedSolver` first diagonalizes each J channel on the radial
  grid, keeps channel eigenfunctions inside an energy window and diagonalizes
  the field coupling in that smaller basis.  Scans and cascades use it because
  they need hundreds of eigenpairs per field value.

Eigenvectors are always reported as coefficient matrices over (i, J).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment

from polardimer.angular import AngularBasis, cos_theta_elements, j_squared_diagonal
from polardimer.krylov import lanczos
from polardimer.model import CurvePair
from polardimer.radial import RadialGrid

Label = tuple  # (v, J, M)


class LabelingError(RuntimeError):
    def __init__(self, F_lo: float, F_hi: float, overlap: float):
        super().__init__(
            f"adiabatic labeling failed between F={F_lo:.6e} and F={F_hi:.6e} a.u.: "
            f"best overlap {overlap:.3f} after bisection; avoided crossing too narrow to follow"
        )
        self.F_lo, self.F_hi, self.overlap = F_lo, F_hi, overlap


@dataclass(eq=False)
class EigenState:
    energy: float
    M: int
    F: float
    js: np.ndarray
    label: Label | None = None
    bound: bool = True
    reduced: np.ndarray | None = field(default=None, repr=False)  # coefficients in a contracted basis
    _coefficients: np.ndarray | None = field(default=None, repr=False)
    _expand: Callable[[], np.ndarray] | None = field(default=None, repr=False)

    @property
    def coefficients(self) -> np.ndarray:
        """Coefficient matrix of shape (N_radial, n_J)."""
        if self._coefficients is None:
            self._coefficients = self._expand()
            self._expand = None
        return self._coefficients

    @property
    def j_weights(self) -> np.ndarray:
        """Norm carried by each rotational component."""
        return np.sum(self.coefficients**2, axis=0)

    @property
    def dominant_J(self) -> int:
        return int(self.js[np.argmax(self.j_weights)])

    def relabel(self, label: Label | None) -> "EigenState":
        return EigenState(self.energy, self.M, self.F, self.js, label, self.bound, self.reduced,
                          self._coefficients, self._expand)


def continuum_margin(grid: RadialGrid) -> float:
    """Half the spacing of the lowest box levels; states below -margin count as bound."""
    L = grid.r_max - grid.r_min
    return 1.5 * math.pi**2 / (2.0 * grid.mu * L**2)


class HamiltonianMatrix:
    """Structured symmetric Hamiltonian; applied blockwise, assembled sparse on request."""

    def __init__(self, grid: RadialGrid, basis: AngularBasis, curve: CurvePair, F: float):
        if F < 0:
            raise ValueError("field strength must be non-negative")
        if not curve.covers(grid.points[0], grid.points[-1]):
            raise ValueError("curve domain does not cover the radial grid")
        self.grid, self.basis, self.curve, self.F = grid, basis, curve, float(F)
        R = grid.points
        V, D = curve.evaluate(R)
        V = V - curve.dissociation_energy
        self.kinetic = grid.kinetic
        self.diagonal = V[:, None] + j_squared_diagonal(basis)[None, :] / (2.0 * curve.reduced_mass * R[:, None] ** 2)
        self.dipole = np.asarray(D, dtype=float)
        self.cos_off = cos_theta_elements(basis)
        self.shape = (grid.N * basis.size,) * 2

    @property
    def n_radial(self) -> int:
        return self.grid.N

    @property
    def n_angular(self) -> int:
        return self.basis.size

    def _apply_cos(self, C: np.ndarray) -> np.ndarray:
        out = np.zeros_like(C)
        if C.shape[1] > 1:
            out[:, 1:] += C[:, :-1] * self.cos_off
            out[:, :-1] += C[:, 1:] * self.cos_off
        return out

    def apply(self, C: np.ndarray) -> np.ndarray:
        """H acting on a coefficient matrix (N, n_J)."""
        out = self.kinetic @ C + self.diagonal * C
        if self.F != 0.0:
            out -= self.F * self.dipole[:, None] * self._apply_cos(C)
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        C = x.reshape(self.n_radial, self.n_angular)
        return self.apply(C).ravel()

    def block(self, J: int) -> np.ndarray:
        j = self.basis.index(J)
        return self.kinetic + np.diag(self.diagonal[:, j])

    def tosparse(self) -> sp.csr_matrix:
        nJ = self.n_angular
        H = sp.kron(sp.csr_matrix(self.kinetic), sp.identity(nJ), format="csr")
        H = H + sp.diags(self.diagonal.ravel())
        if self.F != 0.0 and nJ > 1:
            cosm = sp.diags([self.cos_off, self.cos_off], [1, -1])
            H = H - self.F * sp.kron(sp.diags(self.dipole), cosm, format="csr")
        return H.tocsr()

    def toarray(self) -> np.ndarray:
        return self.tosparse().toarray()


def assemble(grid: RadialGrid, basis: AngularBasis, curve: CurvePair, F: float) -> HamiltonianMatrix:
    return HamiltonianMatrix(grid, basis, curve, F)


def states_from_eigenpairs(H: HamiltonianMatrix, values, vectors) -> list[EigenState]:
    margin = continuum_margin(H.grid)
    states = []
    for e, vec in zip(values, vectors.T):
        C = vec.reshape(H.n_radial, H.n_angular)
        C = _fix_sign(C)
        states.append(EigenState(float(e), H.basis.M, H.F, H.basis.js, None, bool(e < -margin),
                                 _coefficients=C))
    return states


def _fix_sign(C: np.ndarray) -> np.ndarray:
    flat = C.ravel()
    k = np.argmax(np.abs(flat))
    return -C if flat[k] < 0 else C


def solve_bound(H: HamiltonianMatrix, how_many: int, *, method: str = "lanczos", tol: float = 1e-10,
                seed: int = 0, max_restarts: int | None = None) -> list[EigenState]:
    """Lowest ``how_many`` eigenstates of ``H``, sorted by energy.

    At F = 0 the J blocks decouple and are diagonalized separately, so every
    returned vector lives in exactly one J block.
    """
    if how_many < 1:
        raise ValueError("how_many must be >= 1")
    nJ = H.n_angular
    if H.F == 0.0 and nJ > 1:
        pieces = []
        for j, J in enumerate(H.basis.js):
            k = min(how_many, H.n_radial)
            vals, vecs = _solve(lambda x, j=j: H.kinetic @ x + H.diagonal[:, j] * x, H.block(J),
                                H.n_radial, k, method, tol, seed, max_restarts)
            for e, v in zip(vals, vecs.T):
                pieces.append((e, j, v))
        pieces.sort(key=lambda t: t[0])
        pieces = pieces[:how_many]
        values = np.array([p[0] for p in pieces])
        vectors = np.zeros((H.shape[0], len(pieces)))
        for col, (_, j, v) in enumerate(pieces):
            C = np.zeros((H.n_radial, nJ))
            C[:, j] = v
            vectors[:, col] = C.ravel()
        return states_from_eigenpairs(H, values, vectors)
    vals, vecs = _solve(H.matvec, None, H.shape[0], how_many, method, tol, seed, max_restarts, H)
    return states_from_eigenpairs(H, vals, vecs)


def _solve(matvec, dense, n, k, method, tol, seed, max_restarts, H=None):
    if method == "dense":
        A = dense if dense is not None else H.toarray()
        vals, vecs = sla.eigh(A, subset_by_index=(0, k - 1))
        return vals, vecs
    if method != "lanczos":
        raise ValueError(f"unknown method {method!r}")
    res = lanczos(matvec, n, k, tol=tol, seed=seed, max_restarts=max_restarts)
    return res.values, res.vectors


def solve_dense(H: HamiltonianMatrix) -> list[EigenState]:
    vals, vecs = np.linalg.eigh(H.toarray())
    return states_from_eigenpairs(H, vals, vecs)


def label_field_free(states: Sequence[EigenState], tol: float = 1e-12) -> list[EigenState]:
    """Attach (v, J, M) to F = 0 states: v counts bound levels within each J block."""
    out = []
    counters: dict[int, int] = {}
    for s in sorted(states, key=lambda s: s.energy):
        w = s.j_weights
        J = int(s.js[np.argmax(w)])
        if np.sum(w) - np.max(w) > tol * np.sum(w):
            raise ValueError("state is not a pure J state; field-free labels need F = 0")
        if s.bound:
            v = counters.get(J, 0)
            counters[J] = v + 1
            out.append(s.relabel((v, J, s.M)))
        else:
            out.append(s.relabel(None))
    return out


class RadialChannels:
    """Field-free radial eigenfunctions of every J channel, shared by all M.

    Channel functions with energies in [e_min, e_max] are kept.  Vibrational
    quantum numbers count all bound levels of the channel from the bottom, so
    they stay correct when e_min discards deep levels.
    """

    def __init__(self, grid: RadialGrid, curve: CurvePair, J_max: int,
                 e_min: float = -math.inf, e_max: float = math.inf):
        self.grid, self.curve, self.J_max = grid, curve, J_max
        R = grid.points
        V, D = curve.evaluate(R)
        V = V - curve.dissociation_energy
        self.dipole = np.asarray(D, dtype=float)
        self.margin = continuum_margin(grid)
        self._all = []
        for J in range(J_max + 1):
            h = grid.kinetic + np.diag(V + J * (J + 1) / (2.0 * curve.reduced_mass * R**2))
            e, u = np.linalg.eigh(h)
            u = u * np.where(u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])] < 0, -1.0, 1.0)
            v_all = np.where(e < -self.margin, np.arange(e.size), -1)
            self._all.append((e, u, v_all))
        self._set_window(e_min, e_max)

    def _set_window(self, e_min: float, e_max: float) -> None:
        self.e_min, self.e_max = e_min, e_max
        self.energies, self.vectors, self.v_index = [], [], []
        for e, u, v_all in self._all:
            keep = (e >= e_min) & (e <= e_max)
            self.energies.append(e[keep])
            self.vectors.append(u[:, keep])
            self.v_index.append(v_all[keep])
        self._dip_blocks: dict[int, np.ndarray] = {}

    def restrict(self, e_min: float = -math.inf, e_max: float = math.inf) -> "RadialChannels":
        """Same channels with a different energy window (no re-diagonalization)."""
        other = object.__new__(RadialChannels)
        other.grid, other.curve, other.J_max = self.grid, self.curve, self.J_max
        other.dipole, other.margin, other._all = self.dipole, self.margin, self._all
        other._set_window(e_min, e_max)
        return other

    def level(self, v: int, J: int) -> float:
        """Field-free energy of bound level (v, J)."""
        e, _, v_all = self._all[J]
        hit = np.nonzero(v_all == v)[0]
        if hit.size == 0:
            raise KeyError(f"no bound level v={v} in channel J={J}")
        return float(e[hit[0]])

    def dipole_block(self, J: int) -> np.ndarray:
        """<v J|D(R)|v' J+1> between kept channel functions."""
        if J not in self._dip_blocks:
            self._dip_blocks[J] = self.vectors[J].T @ (self.dipole[:, None] * self.vectors[J + 1])
        return self._dip_blocks[J]


class ContractedSolver:
    """Diagonalize the fixed-M Hamiltonian in the basis of field-free channel functions."""

    def __init__(self, channels: RadialChannels, M: int):
        self.channels = channels
        self.M = M
        self.basis = AngularBasis(M, channels.J_max)
        self.js = self.basis.js
        sizes = [channels.energies[J].size for J in self.js]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.dim = int(self.offsets[-1])
        self.e0 = np.concatenate([channels.energies[J] for J in self.js])
        self.cos_off = cos_theta_elements(self.basis)
        self.basis_J = np.concatenate([np.full(n, J) for J, n in zip(self.js, sizes)])
        self.basis_v = np.concatenate([channels.v_index[J] for J in self.js])

    def coupling(self) -> np.ndarray:
        """Matrix of D(R) cos(theta) in the contracted basis."""
        X = np.zeros((self.dim, self.dim))
        for k, J in enumerate(self.js[:-1]):
            a = slice(self.offsets[k], self.offsets[k + 1])
            b = slice(self.offsets[k + 1], self.offsets[k + 2])
            blk = self.cos_off[k] * self.channels.dipole_block(J)
            X[a, b] = blk
            X[b, a] = blk.T
        return X

    def matrix(self, F: float) -> np.ndarray:
        H = -F * self.coupling() if F != 0.0 else np.zeros((self.dim, self.dim))
        H[np.diag_indices(self.dim)] += self.e0
        return H

    def _expand(self, c: np.ndarray) -> Callable[[], np.ndarray]:
        def expand():
            N = self.channels.grid.N
            C = np.zeros((N, self.js.size))
            for k, J in enumerate(self.js):
                seg = c[self.offsets[k]:self.offsets[k + 1]]
                if seg.size:
                    C[:, k] = self.channels.vectors[J] @ seg
            return C
        return expand

    def solve(self, F: float, e_range: tuple[float, float] | None = None) -> list[EigenState]:
        """Eigenstates at field ``F`` sorted by energy (optionally only inside ``e_range``).

        At F = 0 the field-free channel functions are returned with their exact
        (v, J, M) labels; continuum functions carry no label.
        """
        margin = self.channels.margin
        if F == 0.0:
            order = np.argsort(self.e0, kind="stable")
            states = []
            for idx in order:
                e = self.e0[idx]
                if e_range is not None and not (e_range[0] <= e <= e_range[1]):
                    continue
                c = np.zeros(self.dim)
                c[idx] = 1.0
                v = int(self.basis_v[idx])
                label = (v, int(self.basis_J[idx]), self.M) if v >= 0 else None
                states.append(EigenState(float(e), self.M, 0.0, self.js, label, bool(e < -margin),
                                         reduced=c, _expand=self._expand(c)))
            return states
        H = self.matrix(F)
        if e_range is None:
            vals, vecs = np.linalg.eigh(H)
        else:
            vals, vecs = sla.eigh(H, subset_by_value=e_range)
        states = []
        for e, c in zip(vals, vecs.T):
            k = np.argmax(np.abs(c))
            if c[k] < 0:
                c = -c
            states.append(EigenState(float(e), self.M, float(F), self.js, None, bool(e < -margin),
                                     reduced=c, _expand=self._expand(c)))
        return states


def _overlap_matrix(a: Sequence[EigenState], b: Sequence[EigenState]) -> np.ndarray:
    if all(s.reduced is not None for s in a) and all(s.reduced is not None for s in b):
        A = np.array([s.reduced for s in a])
        B = np.array([s.reduced for s in b])
    else:
        A = np.array([s.coefficients.ravel() for s in a])
        B = np.array([s.coefficients.ravel() for s in b])
    return np.abs(A @ B.T)


def advance_labels(solve, prev: Sequence[EigenState], F_a: float, F_b: float, min_overlap: float = 0.5,
                   max_depth: int = 10) -> list[EigenState]:
    """One continuation step F_a -> F_b (bisected as needed); see :func:`label_states`."""
    return _advance(solve, list(prev), F_a, F_b, min_overlap, 0, max_depth)


def _advance(solve, prev: list[EigenState], F_a: float, F_b: float, min_overlap: float,
             depth: int, max_depth: int) -> list[EigenState]:
    new = solve(F_b)
    tracked = [s for s in prev if s.label is not None]
    if not tracked:
        return new
    O = _overlap_matrix(tracked, new)
    if O.shape[1] < O.shape[0]:
        raise LabelingError(F_a, F_b, 0.0)
    rows, cols = linear_sum_assignment(-O)
    worst = float(O[rows, cols].min())
    if worst < min_overlap:
        if depth >= max_depth:
            raise LabelingError(F_a, F_b, worst)
        mid = 0.5 * (F_a + F_b)
        half = _advance(solve, prev, F_a, mid, min_overlap, depth + 1, max_depth)
        return _advance(solve, half, mid, F_b, min_overlap, depth + 1, max_depth)
    labels: list = [None] * len(new)
    for r, c in zip(rows, cols):
        labels[c] = tracked[r].label
    return [s.relabel(l) for s, l in zip(new, labels)]


def default_field_path(F_target: float, steps: int = 64) -> list[float]:
    return list(np.linspace(0.0, F_target, steps + 1))


def label_states(solve: Callable[[float], list[EigenState]], field_path: Iterable[float],
                 states_at_zero: Sequence[EigenState], *, min_overlap: float = 0.5,
                 max_depth: int = 10) -> list[EigenState]:
    """Carry field-free labels along an increasing field path by maximal overlap.

    At each step labels are transferred with a maximum-overlap bijection
    (Hungarian assignment).  When any transferred overlap falls below
    ``min_overlap`` the step is bisected, at most ``max_depth`` times.
    Returns all states at the final field, unmatched ones with label None.
    """
    return label_along(solve, field_path, states_at_zero, min_overlap=min_overlap, max_depth=max_depth)[-1]


def label_along(solve: Callable[[float], list[EigenState]], field_path: Iterable[float],
                states_at_zero: Sequence[EigenState], *, min_overlap: float = 0.5,
                max_depth: int = 10) -> list[list[EigenState]]:
    """Like :func:`label_states` but returns the labeled spectrum at every path point."""
    path = [float(F) for F in field_path]
    if not path or path[0] != 0.0:
        raise ValueError("field path must start at F = 0")
    if any(b <= a for a, b in zip(path, path[1:])):
        raise ValueError("field path must be strictly increasing")
    current = list(states_at_zero)
    out = [current]
    for F_a, F_b in zip(path, path[1:]):
        current = _advance(solve, current, F_a, F_b, min_overlap, 0, max_depth)
        out.append(current)
    return out


def scan_path(F_values: Iterable[float], steps: int = 64) -> list[float]:
    """Uniform continuation path from 0 to max(F_values) that also visits every F value."""
    F_values = sorted({float(F) for F in F_values})
    if not F_values or F_values[0] < 0:
        raise ValueError("field values must be non-negative")
    grid = set(default_field_path(F_values[-1], steps)) if F_values[-1] > 0 else {0.0}
    return sorted(grid | set(F_values) | {0.0})


def hybridization(state: EigenState) -> float:
    """<J^2> - J(J+1) with J the field-free label of the state."""
    if state.label is None:
        raise ValueError("hybridization needs a labeled state")
    J = state.label[1]
    js = state.js.astype(float)
    w = state.j_weights
    # weighted difference so that a pure rotational state gives exactly zero
    return float(np.sum(w * (js * (js + 1) - J * (J + 1)))) / float(np.sum(w))


_OBSERVABLES = ("J2", "cos", "R", "dipole_cos")


def expectation(state: EigenState, observable: str, grid: RadialGrid | None = None,
                curve: CurvePair | None = None) -> float:
    """<psi|O|psi> for O in {J2, cos, R, dipole_cos} (R and dipole_cos need the grid)."""
    if observable not in _OBSERVABLES:
        raise ValueError(f"unsupported observable {observable!r}; choose from {_OBSERVABLES}")
    C = state.coefficients
    norm = float(np.sum(C**2))
    if observable == "J2":
        J = state.js.astype(float)
        return float(np.sum(state.j_weights * J * (J + 1))) / norm
    if observable == "R":
        if grid is None:
            raise ValueError("<R> needs the radial grid")
        return float(np.sum(grid.points[:, None] * C**2)) / norm
    off = cos_theta_elements(AngularBasis(state.M, int(state.js[-1])))
    cosC = 2.0 * np.sum(C[:, :-1] * C[:, 1:] * off, axis=1) if C.shape[1] > 1 else np.zeros(C.shape[0])
    if observable == "cos":
        return float(np.sum(cosC)) / norm
    if grid is None or curve is None:
        raise ValueError("<D cos> needs the grid and curve")
    return float(np.sum(curve.dipole(grid.points) * cosC)) / norm
