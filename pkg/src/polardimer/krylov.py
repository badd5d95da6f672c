"""Restarted Lanczos for the lowest eigenpairs of a real symmetric operator.

Every new Krylov vector is orthogonalized twice against the whole basis (full
reorthogonalization), so the projected matrix can be formed explicitly as
V^T A V.  Restarts keep the wanted Ritz vectors plus the current residual
direction (thick restart), which preserves the Krylov structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class KrylovConvergenceError(RuntimeError):
    def __init__(self, message: str, worst_residual: float):
        super().__init__(f"{message} (worst residual {worst_residual:.3e})")
        self.worst_residual = worst_residual


@dataclass
class LanczosResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    matvecs: int
    restarts: int
    norm_estimate: float


def _orthogonalize(w: np.ndarray, V: np.ndarray) -> np.ndarray:
    for _ in range(2):
        w = w - V @ (V.T @ w)
    return w


def lanczos(matvec: Callable[[np.ndarray], np.ndarray], n: int, k: int, *, tol: float = 1e-10,
            subspace: int | None = None, max_restarts: int | None = None,
            seed: int = 0, v0: np.ndarray | None = None) -> LanczosResult:
    """Lowest ``k`` eigenpairs of the symmetric operator ``matvec`` of dimension ``n``.

    Converged when every wanted residual ||A y - theta y|| <= tol * ||A||, with
    ||A|| estimated by the largest Ritz value magnitude seen.
    """
    if k < 1:
        raise ValueError("need at least one eigenpair")
    if k > n:
        raise ValueError(f"requested {k} eigenpairs of a {n}-dimensional operator")
    m = min(n, subspace or max(2 * k + 20, k + 40))
    if max_restarts is None:
        max_restarts = 50 * k
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) if v0 is None else np.asarray(v0, dtype=float).copy()
    v /= np.linalg.norm(v)

    V = np.zeros((n, m))
    W = np.zeros((n, m))
    V[:, 0] = v
    n_kept = 0
    matvecs = 0
    anorm = 0.0
    worst = np.inf
    for restart in range(max_restarts + 1):
        j = n_kept
        while j < m:
            W[:, j] = matvec(V[:, j])
            matvecs += 1
            if j + 1 == m:
                break
            w = _orthogonalize(W[:, j], V[:, : j + 1])
            beta = np.linalg.norm(w)
            if beta < 1e-14 * max(anorm, 1.0):
                # invariant subspace; continue with a fresh random direction
                w = _orthogonalize(rng.standard_normal(n), V[:, : j + 1])
                beta = np.linalg.norm(w)
            V[:, j + 1] = w / beta
            j += 1
        Hm = V[:, :m].T @ W[:, :m]
        Hm = 0.5 * (Hm + Hm.T)
        theta, S = np.linalg.eigh(Hm)
        anorm = max(anorm, float(np.max(np.abs(theta))))
        Y = V[:, :m] @ S[:, :k]
        AY = W[:, :m] @ S[:, :k]
        R = AY - Y * theta[:k]
        res = np.linalg.norm(R, axis=0)
        worst = float(np.max(res))
        if worst <= tol * max(anorm, 1e-300) or m == n:
            return LanczosResult(theta[:k], Y, res, matvecs, restart, anorm)
        # thick restart: keep p lowest Ritz vectors, continue from the residual direction
        p = min(m - 2, max(k + (m - k) // 2, k))
        Yp = V[:, :m] @ S[:, :p]
        AYp = W[:, :m] @ S[:, :p]
        r = _orthogonalize(W[:, m - 1] - V[:, :m] @ Hm[:, m - 1], Yp)
        nr = np.linalg.norm(r)
        if nr < 1e-14 * anorm:
            r = _orthogonalize(rng.standard_normal(n), Yp)
            nr = np.linalg.norm(r)
        V[:, :p] = Yp
        W[:, :p] = AYp
        V[:, p] = r / nr
        V[:, p + 1:] = 0.0
        n_kept = p
    raise KrylovConvergenceError(f"Lanczos did not converge {k} eigenpairs in {max_restarts} restarts", worst)
