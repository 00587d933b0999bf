"""Depth-first branch and bound over binary row fixings.

Pending nodes are stored as two integers each, ``(level, fix)``, where ``fix``
is the 1-based row index that the node pins, negated for the lower bound.
The fixings of all ancestors are recovered from a path buffer that depth-first
order keeps valid: when a node at level ``l`` is popped, ``path[:l-1]`` still
holds its parent's fixings.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from typing import NamedTuple

import numpy as np

from .ldp import RelaxStatus, WorkingSet, bound_tol_primal, default_tol_primal, solve_relaxation
from .transform import (
    MiqpProblem,
    NotPositiveDefinite,
    qp_objective,
    recover_solution,
    regularize,
    to_ldp,
)

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NODE_LIMIT = "node_limit"
    ITER_LIMIT = "iter_limit"


class Node(NamedTuple):
    level: int
    fix: int


class Tree:
    """Fixed-capacity LIFO of pending nodes plus the signed path buffer."""

    def __init__(self, n_b: int):
        self.n_b = n_b
        self.capacity = n_b + 1
        self.levels = np.zeros(self.capacity, dtype=np.int64)
        self.fixes = np.zeros(self.capacity, dtype=np.int64)
        self.path = np.zeros(n_b, dtype=np.int64)
        self.size = 0
        self.max_size = 0

    def __len__(self):
        return self.size

    @property
    def int_storage(self) -> int:
        return self.levels.size + self.fixes.size + self.path.size

    def push(self, node: Node):
        if self.size >= self.capacity:
            raise OverflowError("pending-node stack is full")
        self.levels[self.size] = node.level
        self.fixes[self.size] = node.fix
        self.size += 1
        self.max_size = max(self.max_size, self.size)

    def pop(self) -> Node:
        self.size -= 1
        return Node(int(self.levels[self.size]), int(self.fixes[self.size]))

    def top(self) -> Node:
        return Node(int(self.levels[self.size - 1]), int(self.fixes[self.size - 1]))


@dataclasses.dataclass
class Options:
    eps_reg: float | None = None
    tol_rel: float = 1e-6
    early_term: bool = True
    hot_start: bool = True
    node_limit: int | None = None


@dataclasses.dataclass
class NodeRecord:
    level: int
    fix: int
    fix_lo: tuple
    fix_hi: tuple
    status: RelaxStatus
    J: float
    parent_J: float
    stack_size: int
    hot: bool
    iters: int
    branch: tuple | None = None


@dataclasses.dataclass
class SolveTrace:
    """Per-node log filled in by :func:`solve_miqp` when passed in."""

    nodes: list = dataclasses.field(default_factory=list)
    incumbents: list = dataclasses.field(default_factory=list)


@dataclasses.dataclass
class SolverResult:
    status: Status
    x: np.ndarray | None
    J: float
    nodes: int = 0
    iters: int = 0
    max_stack: int = 0
    eps_reg: float = 0.0
    u: np.ndarray | None = None


def decode_node(tree: Tree, node: Node):
    """Write ``node``'s fixing into the path buffer and return ``(fix_lo, fix_hi)``.

    Indices are 0-based rows.
    """
    if node.level == 0:
        return (), ()
    tree.path[node.level - 1] = node.fix
    entries = tree.path[: node.level]
    fix_lo = tuple(sorted(int(-e) - 1 for e in entries if e < 0))
    fix_hi = tuple(sorted(int(e) - 1 for e in entries if e > 0))
    return fix_lo, fix_hi


def select_branch_index(binary, active) -> int:
    """Smallest binary row not in the working set."""
    return min(i for i in binary if i not in active)


def select_child(u, M_i, dl_i, du_i) -> str:
    return "lower" if M_i @ u <= 0.5 * (dl_i + du_i) else "upper"


def push_children(tree: Tree, parent_level: int, i: int, preferred: str):
    lo = Node(parent_level + 1, -(i + 1))
    hi = Node(parent_level + 1, i + 1)
    if preferred == "lower":
        tree.push(hi)
        tree.push(lo)
    else:
        tree.push(lo)
        tree.push(hi)


def hot_start_for(node: Node, prev: WorkingSet | None, prev_level: int) -> WorkingSet | None:
    """Parent's working set extended by ``node``'s fixing, or None on a backtrack."""
    if prev is None or node.level != prev_level + 1:
        return None
    ws = prev.copy()
    ws.add(abs(node.fix) - 1, upper=node.fix > 0)
    return ws


def _transform(prob: MiqpProblem, eps_reg):
    if eps_reg:
        return to_ldp(regularize(prob, eps_reg)), eps_reg
    try:
        return to_ldp(prob), 0.0
    except NotPositiveDefinite:
        if eps_reg is not None:
            raise
    eps = 1e-5 * (1.0 + float(np.abs(prob.H).max()))
    log.info("Hessian not positive definite; regularizing binary rows with eps=%g", eps)
    return to_ldp(regularize(prob, eps)), eps


def solve_miqp(prob: MiqpProblem, opts: Options | None = None, *, trace: SolveTrace | None = None,
               **kwargs) -> SolverResult:
    """Solve ``prob`` to global optimality.

    Keyword arguments override fields of ``opts``. An explicit ``eps_reg=0``
    disables the automatic regularization fallback for singular Hessians.
    """
    opts = dataclasses.replace(opts or Options(), **kwargs)
    ldp, eps = _transform(prob, opts.eps_reg)
    M, dl, du = ldp.M, ldp.dl, ldp.du
    binary = ldp.binary
    tol = min(default_tol_primal(ldp, opts.tol_rel), bound_tol_primal(prob, opts.tol_rel))

    tree = Tree(len(binary))
    tree.push(Node(0, 0))
    u_best, J_best = None, math.inf
    prev_ws, prev_level = None, -1
    level_J = [math.inf] * (len(binary) + 1)
    nodes = iters = 0
    status = None

    while len(tree):
        if opts.node_limit is not None and nodes >= opts.node_limit:
            status = Status.NODE_LIMIT
            break
        node = tree.pop()
        nodes += 1
        fix_lo, fix_hi = decode_node(tree, node)
        warm = hot_start_for(node, prev_ws, prev_level) if opts.hot_start else None
        prev_ws, prev_level = None, -1
        res = solve_relaxation(ldp, fix_lo, fix_hi, warm, J_best if opts.early_term else math.inf,
                               tol_primal=tol)
        iters += res.iters
        J = res.J if res.status == RelaxStatus.OPTIMAL else math.inf
        level_J[node.level] = J
        rec = None
        if trace is not None:
            rec = NodeRecord(node.level, node.fix, fix_lo, fix_hi, res.status, J,
                             level_J[node.level - 1] if node.level else -math.inf,
                             len(tree), warm is not None, res.iters)
            trace.nodes.append(rec)
        if res.status == RelaxStatus.ITER_LIMIT:
            status = Status.ITER_LIMIT
            break
        if J >= J_best:
            continue
        ws = res.working_set
        active = set(ws.active) | ws.implied
        if all(i in active for i in binary):
            u_best, J_best = res.u, J
            if trace is not None:
                trace.incumbents.append(J)
            continue
        i = select_branch_index(binary, active)
        side = select_child(res.u, M[i], dl[i], du[i])
        push_children(tree, node.level, i, side)
        if rec is not None:
            rec.branch = (i, side)
        prev_ws, prev_level = ws, node.level

    if status is None:
        status = Status.OPTIMAL if u_best is not None else Status.INFEASIBLE
    x = J_out = None
    if u_best is not None:
        x = recover_solution(u_best, ldp)
        J_out = qp_objective(prob, x) if eps else J_best - ldp.offset
    if status == Status.OPTIMAL:
        return SolverResult(status, x, J_out, nodes, iters, tree.max_size, eps, u_best)
    return SolverResult(status, x, math.inf if J_out is None else J_out, nodes, iters, tree.max_size, eps,
                        u_best)
