"""Command-line front end: ``solve``, ``verify`` and ``bench``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time

import numpy as np

from .bnb import Options, Status, solve_miqp
from .io import ProblemFileError, read_problem
from .problem_gen import MAX_BRUTE_FORCE_BINARIES, GenSpec, brute_force_solve, random_miqp
from .transform import NotPositiveDefinite

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3
EXIT_MISMATCH = 4

BENCH_HEADER = ["nb", "time_med", "time_best", "time_wc", "iter_med", "iter_best", "iter_wc",
                "node_med", "node_best", "node_wc"]

_STATUS_EXIT = {
    Status.OPTIMAL: EXIT_OK,
    Status.INFEASIBLE: EXIT_INFEASIBLE,
    Status.NODE_LIMIT: EXIT_LIMIT,
    Status.ITER_LIMIT: EXIT_LIMIT,
}


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _num(x):
    if x is None:
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _options(args) -> Options:
    return Options(eps_reg=args.reg, tol_rel=args.tol, early_term=not args.no_early_term,
                   node_limit=args.node_limit)


def cmd_solve(args) -> int:
    try:
        prob = read_problem(args.path)
        res = solve_miqp(prob, _options(args))
    except (OSError, ProblemFileError, NotPositiveDefinite) as exc:
        _err(exc)
        return EXIT_INPUT
    x = None if res.x is None else res.x.tolist()
    stats = {"nodes": res.nodes, "iterations": res.iters, "max_stack": res.max_stack}
    if args.json:
        print(json.dumps({"status": res.status.value, "objective": _num(res.J), "x": x, "stats": stats}))
    else:
        print(f"status: {res.status.value}")
        print(f"objective: {res.J!r}")
        print(f"x: {x}")
        print("stats: " + " ".join(f"{k}={v}" for k, v in stats.items()))
    return _STATUS_EXIT[res.status]


def _agree(res, oracle) -> bool:
    if res.status == Status.INFEASIBLE:
        return oracle.x is None
    if res.status != Status.OPTIMAL or oracle.x is None:
        return False
    return abs(res.J - oracle.J) <= 1e-6 * max(1.0, abs(oracle.J))


def cmd_verify(args) -> int:
    if (args.path is None) == (args.random is None):
        _err("give either a problem file or --random NB")
        return EXIT_INPUT
    if args.path is not None:
        try:
            problems = [(args.path, read_problem(args.path))]
        except (OSError, ProblemFileError) as exc:
            _err(exc)
            return EXIT_INPUT
        nb = problems[0][1].n_b
    else:
        nb = args.random
        if nb < 1:
            _err("--random must be at least 1")
            return EXIT_INPUT
    if nb > MAX_BRUTE_FORCE_BINARIES:
        _err(f"{nb} binary rows exceed the enumeration limit of {MAX_BRUTE_FORCE_BINARIES}")
        return EXIT_INPUT
    if args.path is None:
        problems = [(f"instance {k}", random_miqp(GenSpec(nb, seed=(args.seed, nb, k))))
                    for k in range(args.samples)]

    opts = _options(args)
    mismatches = 0
    for name, prob in problems:
        try:
            res = solve_miqp(prob, opts)
            oracle = brute_force_solve(prob)
        except NotPositiveDefinite as exc:
            _err(f"{name}: {exc}")
            return EXIT_INPUT
        ok = _agree(res, oracle)
        print(f"{name}: bnb {res.status.value} J={res.J!r} nodes={res.nodes} iterations={res.iters} | "
              f"brute-force J={oracle.J!r} relaxations={oracle.n_solved} | {'ok' if ok else 'MISMATCH'}")
        if not ok:
            mismatches += 1
            print(f"  bnb x = {None if res.x is None else res.x.tolist()}")
            print(f"  brute-force x = {None if oracle.x is None else oracle.x.tolist()}")
    print(f"{len(problems) - mismatches}/{len(problems)} instances agree")
    return EXIT_MISMATCH if mismatches else EXIT_OK


def _parse_range(text):
    try:
        lo, hi = (int(s) for s in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"invalid range {text!r}")
    return lo, hi


def bench_rows(nb_lo, nb_hi, samples, seed, opts=None):
    """Yield one row of order statistics per binary count."""
    for nb in range(nb_lo, nb_hi + 1):
        times, iters, nodes = [], [], []
        for k in range(samples):
            prob = random_miqp(GenSpec(nb, seed=(seed, nb, k)))
            t0 = time.perf_counter()
            res = solve_miqp(prob, opts)
            times.append(time.perf_counter() - t0)
            iters.append(res.iters)
            nodes.append(res.nodes)
        row = [nb]
        for vals in (times, iters, nodes):
            row += [float(np.median(vals)), float(np.min(vals)), float(np.max(vals))]
        yield row


def _fmt(x):
    if isinstance(x, int):
        return str(x)
    return f"{x:.9g}"


def cmd_bench(args) -> int:
    lo, hi = args.nb_range
    try:
        fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    except OSError as exc:
        _err(exc)
        return EXIT_INPUT
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCH_HEADER)
        for row in bench_rows(lo, hi, args.samples, args.seed, _options(args)):
            writer.writerow([_fmt(v) for v in row])
            fh.flush()
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def _add_solver_flags(p):
    p.add_argument("--reg", type=float, default=None, metavar="EPS",
                   help="regularize binary rows with EPS (default: only if H is singular)")
    p.add_argument("--tol", type=float, default=1e-6, metavar="T", help="relative primal tolerance")
    p.add_argument("--no-early-term", action="store_true", help="disable early termination of relaxations")
    p.add_argument("--node-limit", type=int, default=None, metavar="N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bnbqp", description="Branch-and-bound MIQP solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a JSON problem file")
    p.add_argument("path")
    _add_solver_flags(p)
    p.add_argument("--json", action="store_true", help="print the result as JSON")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="cross-check against brute-force enumeration")
    p.add_argument("path", nargs="?")
    p.add_argument("--random", type=int, metavar="NB", help="generate random instances with NB binaries")
    p.add_argument("--samples", type=int, default=10, metavar="K")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="node/iteration/time statistics on random instances")
    p.add_argument("--nb-range", type=_parse_range, default=(2, 10), metavar="LO:HI")
    p.add_argument("--samples", type=int, default=50, metavar="K")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("--out", default="-", metavar="PATH", help="CSV output path ('-' for stdout)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
