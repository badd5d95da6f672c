"""Associated-Legendre rotational basis at fixed magnetic quantum number.

Basis functions are normalized associated Legendre functions P_J^|M|(cos theta)
without the Condon-Shortley phase (positive as theta -> 0+), J = |M| .. J_max.
Only squared matrix elements enter rates and cross sections, so the phase
convention affects signs of couplings but no observable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AngularBasis:
    M: int
    J_max: int

    def __post_init__(self):
        if self.J_max < abs(self.M):
            raise ValueError(f"J_max={self.J_max} must be >= |M|={abs(self.M)}")

    @property
    def js(self) -> np.ndarray:
        return np.arange(abs(self.M), self.J_max + 1)

    @property
    def size(self) -> int:
        return self.J_max - abs(self.M) + 1

    def index(self, J: int) -> int:
        if not abs(self.M) <= J <= self.J_max:
            raise ValueError(f"J={J} not in basis {abs(self.M)}..{self.J_max}")
        return J - abs(self.M)


def j_squared_diagonal(basis: AngularBasis) -> np.ndarray:
    J = basis.js.astype(float)
    return J * (J + 1.0)


def cos_theta_elements(basis: AngularBasis) -> np.ndarray:
    """Off-diagonal <J+1, M|cos theta|J, M> for J = |M| .. J_max-1 (the diagonal vanishes)."""
    J = basis.js[:-1].astype(float)
    m2 = float(basis.M) ** 2
    return np.sqrt(((J + 1.0) ** 2 - m2) / ((2.0 * J + 1.0) * (2.0 * J + 3.0)))


def cos_theta_matrix(basis: AngularBasis) -> np.ndarray:
    off = cos_theta_elements(basis)
    return np.diag(off, 1) + np.diag(off, -1)


def _sin_raising(m: int, J_max: int) -> np.ndarray:
    """<J', m+1|sin theta|J, m> for m >= 0; rows J' = m+1..J_max, columns J = m..J_max."""
    rows = np.arange(m + 1, J_max + 1)
    cols = np.arange(m, J_max + 1)
    out = np.zeros((rows.size, cols.size))
    for c, l in enumerate(cols):
        lf = float(l)
        if l + 1 <= J_max:
            out[l + 1 - (m + 1), c] = np.sqrt((lf + m + 1) * (lf + m + 2) / ((2 * lf + 1) * (2 * lf + 3)))
        if l - 1 >= m + 1:
            out[l - 1 - (m + 1), c] = -np.sqrt((lf - m - 1) * (lf - m) / ((2 * lf - 1) * (2 * lf + 1)))
    return out


def sin_theta_elements(M: int, M_prime: int, J_max: int) -> np.ndarray:
    """<J', M'|sin theta|J, M> with |M' - M| = 1; rows J' = |M'|..J_max, columns J = |M|..J_max.

    Only |Delta J| = 1 elements are nonzero.
    """
    if abs(M_prime - M) != 1:
        raise ValueError(f"sin theta couples |Delta M| = 1 only, got M={M}, M'={M_prime}")
    a, b = abs(M), abs(M_prime)
    if J_max < max(a, b):
        raise ValueError("J_max below |M| or |M'|")
    if b == a + 1:
        return _sin_raising(a, J_max)
    return _sin_raising(b, J_max).T
