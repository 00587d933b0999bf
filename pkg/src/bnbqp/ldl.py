"""Incrementally updated LDL' factorization of ``M_W M_W'`` for a working set W."""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular


class SingularFactor(RuntimeError):
    pass


class ZeroDescent(RuntimeError):
    """The null-space direction has (numerically) zero directional derivative."""


class LdlFactor:
    """LDL' factor of the Gram matrix of a growing/shrinking set of rows of ``M``.

    Rows are appended with a bordered update. Removing the row at position
    ``pos`` keeps the leading ``pos x pos`` block and re-appends the trailing
    rows. Only the most recently added pivot may be singular; further
    additions are refused until that row (or another dependent one) is removed.
    """

    def __init__(self, M, sing_rel=1e-11):
        self.M = np.asarray(M, dtype=float)
        m = self.M.shape[0]
        self.sing_rel = sing_rel
        self.order: list[int] = []
        self.L = np.zeros((m, m))
        self.D = np.zeros(m)
        self.singular = False
        self._scale = 1.0

    @property
    def k(self) -> int:
        return len(self.order)

    @property
    def Lmat(self) -> np.ndarray:
        k = self.k
        return self.L[:k, :k] + np.eye(k)

    @property
    def pivots(self) -> np.ndarray:
        return self.D[: self.k].copy()

    @property
    def tol_sing(self) -> float:
        return self.sing_rel * max(1.0, self._scale)

    def copy(self) -> LdlFactor:
        new = LdlFactor.__new__(LdlFactor)
        new.M = self.M
        new.sing_rel = self.sing_rel
        new.order = list(self.order)
        new.L = self.L.copy()
        new.D = self.D.copy()
        new.singular = self.singular
        new._scale = self._scale
        return new

    def add_row(self, i: int):
        if self.singular:
            raise SingularFactor("cannot add a row while the factor is singular")
        if i in self.order:
            raise ValueError(f"row {i} is already in the factor")
        self._append(i)

    def _append(self, i):
        k = self.k
        row = self.M[i]
        nrm2 = float(row @ row)
        self._scale = max(self._scale, nrm2)
        if k:
            b = self.M[self.order] @ row
            z = solve_triangular(self.L[:k, :k], b, lower=True, unit_diagonal=True, check_finite=False)
            l = z / self.D[:k]
            pivot = nrm2 - float(z @ l)
            self.L[k, :k] = l
        else:
            pivot = nrm2
        self.D[k] = pivot
        self.order.append(i)
        self.singular = pivot <= self.tol_sing

    def remove_row(self, pos: int):
        k = self.k
        if not 0 <= pos < k:
            raise IndexError(pos)
        trailing = self.order[pos + 1:]
        del self.order[pos:]
        self.L[pos:k, :] = 0.0
        self.D[pos:k] = 0.0
        self.singular = False
        self._scale = max([1.0] + [float(self.M[j] @ self.M[j]) for j in self.order])
        for j in trailing:
            self._append(j)

    def remove_index(self, i: int):
        self.remove_row(self.order.index(i))

    def solve_stationary(self, rhs) -> np.ndarray:
        """Solve ``M_W M_W' lam = -rhs``."""
        if self.singular:
            raise SingularFactor("factor is singular")
        k = self.k
        if k == 0:
            return np.zeros(0)
        Lk = self.L[:k, :k]
        z = solve_triangular(Lk, -np.asarray(rhs, dtype=float), lower=True, unit_diagonal=True, check_finite=False)
        z /= self.D[:k]
        return solve_triangular(Lk, z, lower=True, trans="T", unit_diagonal=True, check_finite=False)

    def null_direction(self, rhs, tol=1e-12) -> np.ndarray:
        """Null vector ``p`` of ``M_W M_W'`` with ``rhs' p < 0``.

        Built from the trailing zero pivot: ``L' p = e_k``.
        """
        if not self.singular:
            raise SingularFactor("factor is not singular")
        k = self.k
        e = np.zeros(k)
        e[-1] = 1.0
        p = solve_triangular(self.L[:k, :k], e, lower=True, trans="T", unit_diagonal=True, check_finite=False)
        rhs = np.asarray(rhs, dtype=float)
        slope = float(rhs @ p)
        if abs(slope) <= tol * max(1.0, np.abs(rhs).max() * np.abs(p).max()):
            raise ZeroDescent(p)
        if slope > 0:
            p = -p
        return p
