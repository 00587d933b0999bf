"""Random MIQP instances, brute-force enumeration and KKT certificates."""

from __future__ import annotations

import dataclasses
import itertools
import math
from typing import Sequence

import numpy as np

from .ldp import RelaxStatus, default_tol_primal, solve_relaxation
from .transform import MiqpProblem, qp_objective, recover_solution, to_ldp

MAX_BRUTE_FORCE_BINARIES = 20


class TooManyBinaries(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class GenSpec:
    """Dimensions and distributions of the random family: ``n = 5 n_b``, ``m = 10 n_b``."""

    n_b: int
    seed: int | Sequence[int] = 0
    cond: float = 1e4
    f_sigma: float = 10.0

    def __post_init__(self):
        if self.n_b < 1:
            raise ValueError("n_b must be at least 1")
        if self.cond < 1:
            raise ValueError("cond must be at least 1")

    @property
    def n(self) -> int:
        return 5 * self.n_b

    @property
    def m(self) -> int:
        return 10 * self.n_b


def spd_with_condition(n: int, cond: float, rng: np.random.Generator) -> np.ndarray:
    """Dense SPD matrix with eigenvalues log-spaced in ``[1, cond]``."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = np.logspace(0.0, np.log10(cond), n) if n > 1 else np.ones(1)
    H = (Q * eig) @ Q.T
    return 0.5 * (H + H.T)


def random_miqp(spec: GenSpec) -> MiqpProblem:
    """Sample one instance; binary rows are ``x_i in {0, 1}`` for ``i < n_b``."""
    rng = np.random.default_rng(spec.seed)
    n, m, nb = spec.n, spec.m, spec.n_b
    A = rng.standard_normal((m, n))
    bu = rng.uniform(0.0, 20.0, m)
    bl = rng.uniform(-20.0, 0.0, m)
    H = spd_with_condition(n, spec.cond, rng)
    f = rng.normal(0.0, spec.f_sigma, n)
    f[:nb] = -np.abs(f[:nb])
    A[:nb] = np.eye(nb, n)
    bl[:nb] = 0.0
    bu[:nb] = 1.0
    return MiqpProblem(H=H, f=f, A=A, bl=bl, bu=bu, binary=tuple(range(nb)))


def random_aux_miqp(spec: GenSpec) -> MiqpProblem:
    """Instance whose binaries carry no quadratic cost, so ``H`` is singular.

    The ``n_b x n_b`` leading block of ``H`` is zero; the binaries still have
    a linear cost, which keeps the optimal assignment unique almost surely.
    """
    prob = random_miqp(spec)
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed).spawn(1)[0])
    H = np.zeros((spec.n, spec.n))
    H[spec.n_b:, spec.n_b:] = spd_with_condition(spec.n - spec.n_b, spec.cond, rng)
    return dataclasses.replace(prob, H=H)


@dataclasses.dataclass
class BruteForceResult:
    x: np.ndarray | None
    J: float
    lam: np.ndarray | None = None
    fix_lo: tuple = ()
    fix_hi: tuple = ()
    n_solved: int = 0


def brute_force_solve(prob: MiqpProblem, max_binaries: int = MAX_BRUTE_FORCE_BINARIES) -> BruteForceResult:
    """Solve every one of the ``2^n_b`` fully fixed relaxations and keep the best."""
    nb = prob.n_b
    if nb > max_binaries:
        raise TooManyBinaries(f"{nb} binary rows exceed the enumeration limit of {max_binaries}")
    ldp = to_ldp(prob)
    tol = default_tol_primal(ldp)
    best = BruteForceResult(None, math.inf)
    count = 0
    for bits in itertools.product((False, True), repeat=nb):
        fix_hi = tuple(i for i, b in zip(prob.binary, bits) if b)
        fix_lo = tuple(i for i, b in zip(prob.binary, bits) if not b)
        res = solve_relaxation(ldp, fix_lo, fix_hi, tol_primal=tol)
        count += 1
        if res.status == RelaxStatus.ITER_LIMIT:
            raise RuntimeError(f"relaxation hit the iteration limit for fixing {bits}")
        if res.status == RelaxStatus.OPTIMAL and res.J < best.J:
            best = BruteForceResult(res.u, res.J, res.working_set.lam.copy(), fix_lo, fix_hi)
    best.n_solved = count
    if best.x is not None:
        best.x = recover_solution(best.x, ldp)
        best.J = qp_objective(prob, best.x)
    return best


@dataclasses.dataclass
class KktReport:
    stationarity: float
    primal: float
    stationary: bool
    feasible: bool
    signs: bool
    complementary: bool

    @property
    def ok(self) -> bool:
        return self.stationary and self.feasible and self.signs and self.complementary


def kkt_check(prob: MiqpProblem, x, lam, fix_lo=(), fix_hi=(), tol: float = 1e-6) -> KktReport:
    """Check first-order optimality of ``x`` with row multipliers ``lam``.

    Multipliers follow the convention ``Hx + f + A'lam = 0`` with ``lam_i >= 0``
    at an upper bound and ``lam_i <= 0`` at a lower bound; rows in ``fix_lo`` /
    ``fix_hi`` are equalities with sign-free multipliers.
    """
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    fix_lo, fix_hi = set(fix_lo), set(fix_hi)
    Ax = prob.A @ x
    grad = prob.H @ x + prob.f
    resid = grad + prob.A.T @ lam
    scale = max(1.0, np.abs(grad).max(initial=0.0), np.abs(prob.f).max(initial=0.0))
    stat = float(np.abs(resid).max(initial=0.0))

    with np.errstate(invalid="ignore"):
        row_tol = tol * (1.0 + np.maximum(np.where(np.isfinite(prob.bl), np.abs(prob.bl), 0.0),
                                          np.where(np.isfinite(prob.bu), np.abs(prob.bu), 0.0)))
        viol = np.maximum(prob.bl - Ax, Ax - prob.bu)
    for i in fix_lo:
        viol[i] = abs(Ax[i] - prob.bl[i])
    for i in fix_hi:
        viol[i] = abs(Ax[i] - prob.bu[i])
    primal = float(np.max(viol - row_tol, initial=-math.inf))

    at_hi = np.abs(Ax - prob.bu) <= row_tol
    at_lo = np.abs(Ax - prob.bl) <= row_tol
    lam_tol = tol * max(1.0, np.abs(lam).max(initial=0.0))
    signs = complementary = True
    for i in range(prob.m):
        if i in fix_lo or i in fix_hi:
            continue
        if lam[i] > lam_tol and not at_hi[i]:
            if at_lo[i]:
                signs = False
            else:
                complementary = False
        elif lam[i] < -lam_tol and not at_lo[i]:
            if at_hi[i]:
                signs = False
            else:
                complementary = False
    return KktReport(
        stationarity=stat,
        primal=primal,
        stationary=stat <= tol * scale,
        feasible=primal <= 0.0,
        signs=signs,
        complementary=complementary,
    )
