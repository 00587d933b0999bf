"""Branch-and-bound MIQP solver with a dual active-set least-distance relaxation solver."""

from .bnb import Options, SolverResult, SolveTrace, Status, solve_miqp
from .io import read_problem, write_problem
from .problem_gen import GenSpec, brute_force_solve, kkt_check, random_aux_miqp, random_miqp
from .transform import LdpProblem, MiqpProblem, NotPositiveDefinite, qp_objective, recover_solution, regularize, to_ldp

__all__ = [
    "GenSpec",
    "LdpProblem",
    "MiqpProblem",
    "NotPositiveDefinite",
    "Options",
    "SolveTrace",
    "SolverResult",
    "Status",
    "brute_force_solve",
    "kkt_check",
    "qp_objective",
    "random_aux_miqp",
    "random_miqp",
    "read_problem",
    "recover_solution",
    "regularize",
    "solve_miqp",
    "to_ldp",
    "write_problem",
]
