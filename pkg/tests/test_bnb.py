import math

import numpy as np
import pytest

from bnbqp.bnb import (
    Node,
    Options,
    SolveTrace,
    Status,
    Tree,
    decode_node,
    hot_start_for,
    push_children,
    select_branch_index,
    select_child,
    solve_miqp,
)
from bnbqp.ldp import RelaxStatus, solve_relaxation
from bnbqp.problem_gen import GenSpec, brute_force_solve, random_miqp
from bnbqp.transform import MiqpProblem, NotPositiveDefinite, to_ldp


def one_var(f, bl=(0.0,), bu=(1.0,), A=((1.0,),), binary=(0,)):
    return MiqpProblem(H=[[1.0]], f=[f], A=A, bl=bl, bu=bu, binary=binary)


def test_one_var_prefers_zero():
    res = solve_miqp(one_var(0.3))
    assert res.status == Status.OPTIMAL
    np.testing.assert_allclose(res.x, [0.0], atol=1e-12)
    assert res.J == pytest.approx(0.0, abs=1e-12)


def test_one_var_prefers_one():
    res = solve_miqp(one_var(-0.8))
    assert res.status == Status.OPTIMAL
    np.testing.assert_allclose(res.x, [1.0])
    assert res.J == pytest.approx(-0.3)


def test_binary_row_incompatible_with_interval():
    prob = one_var(0.0, bl=(0.0, 0.4), bu=(1.0, 0.6), A=((1.0,), (1.0,)))
    res = solve_miqp(prob)
    assert res.status == Status.INFEASIBLE
    assert res.x is None and res.J == math.inf


def test_no_binaries_is_a_qp():
    prob = MiqpProblem(H=np.eye(2), f=[-1.0, -1.0], A=[[1.0, 1.0]], bl=[-np.inf], bu=[1.0])
    res = solve_miqp(prob)
    assert res.status == Status.OPTIMAL
    np.testing.assert_allclose(res.x, [0.5, 0.5])
    assert res.nodes == 1


@pytest.mark.parametrize("seed", range(5))
def test_random_matches_brute_force(seed):
    prob = random_miqp(GenSpec(4, seed=seed))
    assert (prob.n, prob.m) == (20, 40)
    res = solve_miqp(prob)
    oracle = brute_force_solve(prob)
    assert res.status == Status.OPTIMAL
    assert res.J == pytest.approx(oracle.J, rel=1e-6)


def test_decode_three_level_path():
    # rows i, j, k; the level-3 node fixing k low is popped after its parent wrote path = [-i, +j]
    i, j, k = 0, 4, 7
    tree = Tree(3)
    tree.path[:2] = [-(i + 1), j + 1]
    fix_lo, fix_hi = decode_node(tree, Node(3, -(k + 1)))
    assert fix_lo == (i, k)
    assert fix_hi == (j,)


def test_decode_root():
    assert decode_node(Tree(3), Node(0, 0)) == ((), ())


def test_decode_all_positive_chain():
    tree = Tree(4)
    decode_node(tree, Node(1, 3))
    assert decode_node(tree, Node(2, 5)) == ((), (2, 4))


def test_select_branch_index():
    assert select_branch_index((3, 7), set()) == 3
    assert select_branch_index((3, 7), {3}) == 7


def test_select_child():
    assert select_child(np.array([0.0]), np.array([1.0]), 0.0, 1.0) == "lower"
    assert select_child(np.array([1.0]), np.array([1.0]), 0.0, 1.0) == "upper"
    assert select_child(np.array([0.5]), np.array([1.0]), 0.0, 1.0) == "lower"


@pytest.mark.parametrize("preferred, top_fix", [("lower", -4), ("upper", 4)])
def test_push_children(preferred, top_fix):
    tree = Tree(3)
    push_children(tree, 1, 3, preferred)
    assert len(tree) == 2
    assert tree.top() == Node(2, top_fix)
    tree.pop()
    assert tree.top() == Node(2, -top_fix)


def test_tree_capacity_and_storage():
    tree = Tree(2)
    assert tree.int_storage == 2 * 3 + 2
    for _ in range(3):
        tree.push(Node(1, 1))
    with pytest.raises(OverflowError):
        tree.push(Node(1, 1))


def test_hot_start_direct_child_and_backtrack():
    prob = random_miqp(GenSpec(3, seed=11))
    ldp = to_ldp(prob)
    root = solve_relaxation(ldp)
    i = select_branch_index(ldp.binary, set(root.working_set.active))
    k_before = root.working_set.factor.k
    warm = hot_start_for(Node(1, i + 1), root.working_set, 0)
    assert warm is not None
    assert warm.factor.k == k_before + 1 and i in warm.upper and warm.lam[i] == 0
    assert root.working_set.factor.k == k_before
    assert hot_start_for(Node(1, -(i + 1)), root.working_set, 1) is None
    assert hot_start_for(Node(1, i + 1), None, 0) is None
    hot = solve_relaxation(ldp, (), (i,), warm)
    cold = solve_relaxation(ldp, (), (i,))
    assert hot.status == cold.status
    assert hot.J == pytest.approx(cold.J, rel=1e-9)


def shadow_replay(trace, n_b):
    """Re-run the node order with full (fix_lo, fix_hi) sets stored per node."""
    stack = [((), ())]
    max_len = 1
    for rec in trace.nodes:
        fix_lo, fix_hi = stack.pop()
        assert (rec.fix_lo, rec.fix_hi) == (tuple(sorted(fix_lo)), tuple(sorted(fix_hi)))
        if rec.branch is not None:
            i, side = rec.branch
            lo = (fix_lo + (i,), fix_hi)
            hi = (fix_lo, fix_hi + (i,))
            stack.extend([hi, lo] if side == "lower" else [lo, hi])
            max_len = max(max_len, len(stack))
    assert not stack or len(trace.nodes) == 0
    return max_len


@pytest.mark.parametrize("seed", range(20))
def test_path_buffer_matches_shadow(seed):
    nb = 2 + seed % 7
    prob = random_miqp(GenSpec(nb, seed=(7, seed)))
    trace = SolveTrace()
    res = solve_miqp(prob, trace=trace)
    assert shadow_replay(trace, nb) == res.max_stack <= nb + 1
    assert res.nodes == len(trace.nodes)


@pytest.mark.parametrize("seed", range(20))
def test_tree_invariants(seed):
    prob = random_miqp(GenSpec(6, seed=(8, seed)))
    trace = SolveTrace()
    res = solve_miqp(prob, trace=trace)
    for rec in trace.nodes:
        if rec.level:
            assert rec.J >= rec.parent_J - 1e-8
        assert 0 <= rec.level <= prob.n_b
        assert (rec.level == 0) == (rec.fix == 0)
        assert len(rec.fix_lo) + len(rec.fix_hi) == rec.level
    assert all(b <= a for a, b in zip(trace.incumbents, trace.incumbents[1:]))
    assert res.J == pytest.approx(trace.incumbents[-1] - to_ldp(prob).offset)


def test_solution_satisfies_binary_rows():
    prob = random_miqp(GenSpec(5, seed=3))
    res = solve_miqp(prob)
    Ax = prob.A @ res.x
    tol = 1e-6 * 21
    assert np.all(Ax >= prob.bl - tol) and np.all(Ax <= prob.bu + tol)
    for i in prob.binary:
        assert min(abs(Ax[i] - prob.bl[i]), abs(Ax[i] - prob.bu[i])) <= tol


@pytest.mark.parametrize("seed", range(10))
def test_early_termination_neutral(seed):
    prob = random_miqp(GenSpec(5, seed=(9, seed)))
    on = solve_miqp(prob)
    off = solve_miqp(prob, early_term=False)
    assert on.status == off.status
    assert on.J == pytest.approx(off.J, rel=1e-9, abs=1e-9)
    assert on.iters <= off.iters
    assert solve_miqp(prob, hot_start=False).J == pytest.approx(on.J, rel=1e-9)


def test_node_limit():
    prob = random_miqp(GenSpec(6, seed=1))
    res = solve_miqp(prob, Options(node_limit=1))
    assert res.status == Status.NODE_LIMIT
    assert res.nodes == 1


def test_singular_hessian_regularized_automatically():
    prob = MiqpProblem(H=[[1.0, 0.0], [0.0, 0.0]], f=[-0.2, -0.3], A=[[0.0, 1.0], [1.0, 1.0]],
                       bl=[0.0, -5.0], bu=[1.0, 5.0], binary=(0,))
    res = solve_miqp(prob)
    assert res.status == Status.OPTIMAL
    assert res.eps_reg > 0
    np.testing.assert_allclose(res.x, [0.2, 1.0], atol=1e-8)
    assert res.J == pytest.approx(0.5 * 0.04 - 0.04 - 0.3)
    with pytest.raises(NotPositiveDefinite):
        solve_miqp(prob, eps_reg=0)


def test_relaxation_status_recorded():
    prob = one_var(0.0, bl=(0.0, 0.4), bu=(1.0, 0.6), A=((1.0,), (1.0,)))
    trace = SolveTrace()
    solve_miqp(prob, trace=trace)
    assert trace.nodes[0].status == RelaxStatus.OPTIMAL
    assert {r.status for r in trace.nodes[1:]} == {RelaxStatus.INFEASIBLE}
