"""Dual active-set solver for least-distance relaxations.

Solves ``min 1/2 ||u||^2  s.t.  dl <= Mu <= du`` with some rows pinned to one
of their bounds. Working-set rows active at the upper bound carry multipliers
``lam >= 0``, rows at the lower bound ``lam <= 0``; pinned rows are sign free
and never leave the working set. The primal iterate is ``u = -M_W' lam_W``.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np

from .ldl import LdlFactor, ZeroDescent
from .transform import LdpProblem

TOL_DUAL = 1e-10
_TIE = 1e-14


class RelaxStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    FUTILE = "futile"
    ITER_LIMIT = "iter_limit"


@dataclasses.dataclass
class WorkingSet:
    lam: np.ndarray
    upper: set
    lower: set
    factor: LdlFactor
    fixed: frozenset = frozenset()
    # pinned rows dropped from the factor because they were linearly implied
    implied: set = dataclasses.field(default_factory=set)

    @classmethod
    def empty(cls, ldp: LdpProblem) -> WorkingSet:
        return cls(lam=np.zeros(ldp.m), upper=set(), lower=set(), factor=LdlFactor(ldp.M))

    @property
    def active(self) -> list[int]:
        return self.factor.order

    def copy(self) -> WorkingSet:
        return WorkingSet(
            lam=self.lam.copy(),
            upper=set(self.upper),
            lower=set(self.lower),
            factor=self.factor.copy(),
            fixed=self.fixed,
            implied=set(self.implied),
        )

    def add(self, i: int, upper: bool):
        (self.upper if upper else self.lower).add(i)
        self.lam[i] = 0.0
        self.factor.add_row(i)

    def drop(self, i: int):
        self.upper.discard(i)
        self.lower.discard(i)
        self.lam[i] = 0.0
        self.factor.remove_index(i)


@dataclasses.dataclass
class RelaxResult:
    status: RelaxStatus
    u: np.ndarray | None
    J: float
    working_set: WorkingSet
    iters: int


def default_tol_primal(ldp: LdpProblem, rel: float = 1e-6) -> float:
    d = np.concatenate([ldp.dl, ldp.du])
    d = d[np.isfinite(d)]
    return rel * (1.0 + (np.abs(d).max() if d.size else 0.0))


def bound_tol_primal(prob, rel: float = 1e-6) -> float:
    """Primal tolerance scaled by the original bounds ``b`` rather than the shifted ``d``.

    The shift ``M v`` grows without limit as the Hessian approaches
    singularity, so a ``d``-relative tolerance can exceed the bounds
    themselves after regularization.
    """
    b = np.concatenate([prob.bl, prob.bu])
    b = b[np.isfinite(b)]
    return rel * (1.0 + (np.abs(b).max() if b.size else 0.0))


def compute_primal(lam, M, W) -> np.ndarray:
    W = list(W)
    if not W:
        return np.zeros(M.shape[1])
    return -(M[W].T @ lam[W])


def most_violated(u, M, dl, du, W, tol=0.0):
    """Most violated row outside ``W`` as ``(j, "upper" | "lower")``, or None."""
    mask = np.ones(M.shape[0], dtype=bool)
    mask[list(W)] = False
    if not mask.any():
        return None
    Mu = M @ u
    with np.errstate(invalid="ignore"):
        mu_up = np.where(mask, du - Mu, np.inf)
        mu_lo = np.where(mask, Mu - dl, np.inf)
    worst = np.minimum(mu_up, mu_lo)
    j = int(np.argmin(worst))
    if not worst[j] < -tol:
        return None
    side = "upper" if mu_up[j] <= mu_lo[j] + _TIE else "lower"
    return j, side


def fix_component(lam, U, L, C, p, factor=None):
    """Step the dual iterate along ``p`` until a member of ``C`` hits zero and drop it.

    Ties in the ratio test go to the smallest index.
    """
    best, j = math.inf, None
    for i in sorted(C):
        r = -lam[i] / p[i]
        if r < best:
            best, j = r, i
    lam -= (lam[j] / p[j]) * p
    lam[j] = 0.0
    if p[j] < 0:
        U.discard(j)
    elif p[j] > 0:
        L.discard(j)
    if factor is not None:
        factor.remove_index(j)
    return lam, U, L


def _blocking(W, ws, vec, thresh):
    E = ws.fixed
    return [
        i for i in W
        if i not in E and ((i in ws.upper and vec[i] < -thresh) or (i in ws.lower and vec[i] > thresh))
    ]


def solve_relaxation(
    ldp: LdpProblem,
    fix_lo=(),
    fix_hi=(),
    warm: WorkingSet | None = None,
    Jbar: float = math.inf,
    *,
    tol_primal: float | None = None,
    tol_dual: float = TOL_DUAL,
    max_iter: int | None = None,
    history: list | None = None,
) -> RelaxResult:
    """Solve the relaxation with rows ``fix_lo`` pinned low and ``fix_hi`` pinned high.

    ``warm`` is consumed (mutated) when given. The solve stops early with
    ``FUTILE`` once a dual-feasible iterate certifies ``J >= Jbar``. When
    ``history`` is a list, the objective of every accepted dual-feasible
    iterate is appended to it.
    """
    fix_lo, fix_hi = set(fix_lo), set(fix_hi)
    if fix_lo & fix_hi:
        raise ValueError("a row cannot be pinned to both bounds")
    M, dl, du = ldp.M, ldp.dl, ldp.du
    m = ldp.m
    if tol_primal is None:
        tol_primal = default_tol_primal(ldp)
    if max_iter is None:
        max_iter = 100 * (m + ldp.n)

    ws = warm if warm is not None else WorkingSet.empty(ldp)
    ws.fixed = frozenset(fix_lo | fix_hi)
    ws.implied &= ws.fixed
    for i in fix_hi & ws.lower:
        ws.lower.discard(i)
        ws.upper.add(i)
    for i in fix_lo & ws.upper:
        ws.upper.discard(i)
        ws.lower.add(i)
    pending = [i for i in sorted(ws.fixed) if i not in ws.upper and i not in ws.lower and i not in ws.implied]

    factor = ws.factor
    iters = 0
    u = compute_primal(ws.lam, M, factor.order)

    def done(status, u=None, J=math.inf):
        return RelaxResult(status=status, u=u, J=J, working_set=ws, iters=iters)

    while True:
        while pending and not factor.singular:
            i = pending.pop(0)
            ws.add(i, upper=i in fix_hi)
        if iters >= max_iter:
            return done(RelaxStatus.ITER_LIMIT)
        W = list(factor.order)
        rhs = np.array([du[i] if i in ws.upper else dl[i] for i in W])
        iters += 1

        if not factor.singular:
            lam_star = np.zeros(m)
            lam_star[W] = factor.solve_stationary(rhs)
            C = _blocking(W, ws, lam_star, tol_dual)
            if C:
                fix_component(ws.lam, ws.upper, ws.lower, C, lam_star - ws.lam, factor)
                continue
            u = compute_primal(lam_star, M, W)
            J = 0.5 * float(u @ u)
            if J >= Jbar:
                return done(RelaxStatus.FUTILE)
            ws.lam = lam_star
            if history is not None:
                history.append(J)
            if pending:
                continue
            viol = most_violated(u, M, dl, du, W + sorted(ws.implied), tol_primal)
            if viol is None:
                stale = [i for i in ws.implied if abs(M[i] @ u - (du[i] if i in fix_hi else dl[i])) > tol_primal]
                if not stale:
                    return done(RelaxStatus.OPTIMAL, u, J)
                ws.implied -= set(stale)
                pending.extend(sorted(stale))
                continue
            j, side = viol
            ws.add(j, upper=side == "upper")
        else:
            try:
                pW = factor.null_direction(rhs)
            except ZeroDescent as exc:
                _resolve_degenerate(ws, W, np.asarray(exc.args[0]), fix_hi, pending)
                continue
            p = np.zeros(m)
            p[W] = pW
            C = _blocking(W, ws, p, 1e-12 * np.abs(pW).max())
            if not C:
                return done(RelaxStatus.INFEASIBLE)
            fix_component(ws.lam, ws.upper, ws.lower, C, p, factor)


def _resolve_degenerate(ws, W, pW, fix_hi, pending):
    """Singular working set whose null direction leaves the dual objective flat.

    Moving along either ``p`` or ``-p`` is objective neutral, so orient ``p``
    to make the free row with the largest ``|p_i|`` blocking and remove the
    first blocking row. If only pinned rows are involved, the trailing pinned
    row is implied by the others and is set aside (re-checked at the end).
    """
    m = ws.lam.shape[0]
    p = np.zeros(m)
    p[W] = pW
    thresh = 1e-12 * np.abs(pW).max()
    free = [i for i in W if i not in ws.fixed and abs(p[i]) > thresh]
    if free:
        j = max(free, key=lambda i: abs(p[i]))
        if (j in ws.upper) != (p[j] < 0):
            p = -p
        C = _blocking(W, ws, p, thresh)
        fix_component(ws.lam, ws.upper, ws.lower, C, p, ws.factor)
        return
    pinned = [i for i in W if abs(p[i]) > thresh]
    j = max(pinned, key=lambda i: abs(p[i]))
    ws.lam -= (ws.lam[j] / p[j]) * p
    ws.drop(j)
    ws.implied.add(j)
