"""MIQP <-> least-distance problem (LDP) conversion.

A problem ``min 1/2 x'Hx + f'x  s.t.  bl <= Ax <= bu,  A_i x in {bl_i, bu_i} (i in B)``
is mapped through the Cholesky factor ``H = R'R`` and the shift ``u = Rx + v``
(``v = R^{-T} f``) to ``min 1/2 ||u||^2  s.t.  dl <= Mu <= du`` with ``M = A R^{-1}``.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.linalg import solve_triangular


class NotPositiveDefinite(ValueError):
    """Raised when a Cholesky pivot falls below the definiteness tolerance."""


@dataclasses.dataclass(frozen=True)
class MiqpProblem:
    """Mixed-integer QP with double-sided constraint rows.

    ``binary`` holds 0-based row indices of ``A`` whose value must sit on one
    of its two (finite) bounds.
    """

    H: np.ndarray
    f: np.ndarray
    A: np.ndarray
    bl: np.ndarray
    bu: np.ndarray
    binary: tuple[int, ...] = ()

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        f = np.asarray(self.f, dtype=float).ravel()
        A = np.asarray(self.A, dtype=float)
        n = f.shape[0]
        if A.size == 0:
            A = A.reshape(0, n)
        A = np.atleast_2d(A)
        bl = np.asarray(self.bl, dtype=float).ravel()
        bu = np.asarray(self.bu, dtype=float).ravel()
        binary = tuple(int(i) for i in self.binary)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "bl", bl)
        object.__setattr__(self, "bu", bu)
        object.__setattr__(self, "binary", binary)
        self.validate()

    @property
    def n(self) -> int:
        return self.f.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n_b(self) -> int:
        return len(self.binary)

    def validate(self):
        n, m = self.n, self.m
        if self.H.shape != (n, n):
            raise ValueError(f"H: expected shape ({n}, {n}), got {self.H.shape}")
        if not np.all(np.isfinite(self.H)):
            raise ValueError("H: entries must be finite")
        if not np.array_equal(self.H, self.H.T):
            raise ValueError("H: matrix must be symmetric")
        if not np.all(np.isfinite(self.f)):
            raise ValueError("f: entries must be finite")
        if self.A.shape != (m, n):
            raise ValueError(f"A: expected {n} columns, got shape {self.A.shape}")
        if not np.all(np.isfinite(self.A)):
            raise ValueError("A: entries must be finite")
        for name, b in (("bl", self.bl), ("bu", self.bu)):
            if b.shape != (m,):
                raise ValueError(f"{name}: expected length {m}, got {b.shape[0]}")
            if np.any(np.isnan(b)):
                raise ValueError(f"{name}: NaN entries are not allowed")
        if np.any(self.bl > self.bu):
            i = int(np.flatnonzero(self.bl > self.bu)[0])
            raise ValueError(f"bl: bl[{i}] exceeds bu[{i}]")
        prev = -1
        for i in self.binary:
            if not 0 <= i < m:
                raise ValueError(f"binary: index {i} out of range")
            if i <= prev:
                raise ValueError("binary: indices must be strictly increasing")
            prev = i
            if not (np.isfinite(self.bl[i]) and np.isfinite(self.bu[i])):
                raise ValueError(f"binary: row {i} has an infinite bound")
            if not self.bl[i] < self.bu[i]:
                raise ValueError(f"binary: row {i} needs bl < bu")


@dataclasses.dataclass(frozen=True)
class LdpProblem:
    """Least-distance form of a :class:`MiqpProblem`.

    ``offset`` is ``1/2 ||v||^2``; subtracting it from ``1/2 ||u||^2`` gives the
    original objective value.
    """

    M: np.ndarray
    dl: np.ndarray
    du: np.ndarray
    binary: tuple[int, ...]
    R: np.ndarray
    v: np.ndarray
    offset: float

    @property
    def n(self) -> int:
        return self.M.shape[1]

    @property
    def m(self) -> int:
        return self.M.shape[0]


def cholesky_upper(H, tol_pd=None) -> np.ndarray:
    """Upper-triangular ``R`` with ``H = R'R``.

    Raises :class:`NotPositiveDefinite` when a pivot drops to or below
    ``tol_pd`` (default ``1e-12 * trace(H) / n``).
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    if tol_pd is None:
        tol_pd = 1e-12 * max(np.trace(H), 0.0) / max(n, 1)
    R = np.zeros_like(H)
    for k in range(n):
        pivot = H[k, k] - R[:k, k] @ R[:k, k]
        if not pivot > tol_pd:
            raise NotPositiveDefinite(f"pivot {k} is {pivot:.3e} (tolerance {tol_pd:.3e})")
        R[k, k] = np.sqrt(pivot)
        R[k, k + 1:] = (H[k, k + 1:] - R[:k, k] @ R[:k, k + 1:]) / R[k, k]
    return R


def to_ldp(prob: MiqpProblem) -> LdpProblem:
    R = cholesky_upper(prob.H)
    # M R = A  <=>  R' M' = A'
    M = solve_triangular(R, prob.A.T, trans="T", lower=False).T if prob.m else np.zeros((0, prob.n))
    v = solve_triangular(R, prob.f, trans="T", lower=False)
    shift = M @ v
    # infinite entries stay infinite; adding a finite shift keeps them so
    dl = prob.bl + shift
    du = prob.bu + shift
    return LdpProblem(M=M, dl=dl, du=du, binary=prob.binary, R=R, v=v, offset=0.5 * float(v @ v))


def recover_solution(u, ldp: LdpProblem) -> np.ndarray:
    """Map an LDP point back to the original coordinates, ``x = R^{-1}(u - v)``."""
    return solve_triangular(ldp.R, np.asarray(u, dtype=float) - ldp.v, lower=False)


def regularize(prob: MiqpProblem, eps: float) -> MiqpProblem:
    """Add ``eps/2 * ||A_i x - (bl_i + bu_i)/2||^2`` for every binary row.

    The added term is constant over points satisfying the binary constraints,
    so the minimizer is unchanged. The constant part of the square is dropped.
    """
    if eps == 0:
        return prob
    if eps < 0:
        raise ValueError("eps must be positive")
    idx = list(prob.binary)
    if not idx:
        return prob
    Ab = prob.A[idx]
    mid = 0.5 * (prob.bl[idx] + prob.bu[idx])
    H = prob.H + eps * (Ab.T @ Ab)
    H = 0.5 * (H + H.T)
    f = prob.f - eps * (Ab.T @ mid)
    return dataclasses.replace(prob, H=H, f=f)


def qp_objective(prob: MiqpProblem, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(0.5 * x @ prob.H @ x + prob.f @ x)
