"""JSON problem files.

Schema: ``{"n", "m", "H", "f", "A", "bl", "bu", "binary"}`` with row-major
matrices, infinite bounds written as the strings ``"-inf"`` / ``"inf"`` and
1-based ``binary`` row indices.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .transform import MiqpProblem

FIELDS = ("n", "m", "H", "f", "A", "bl", "bu", "binary")
_INF = {"inf": math.inf, "+inf": math.inf, "-inf": -math.inf}


class ProblemFileError(ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def _bound(field, value):
    if isinstance(value, str):
        try:
            return _INF[value.strip().lower()]
        except KeyError:
            raise ProblemFileError(field, f"unrecognized entry {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFileError(field, f"expected a number, got {value!r}")
    return float(value)


def _matrix(field, value, rows, cols):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ProblemFileError(field, "expected a numeric array-of-arrays") from None
    if rows == 0:
        arr = arr.reshape(0, cols)
    if arr.shape != (rows, cols):
        raise ProblemFileError(field, f"expected shape {rows}x{cols}, got {'x'.join(map(str, arr.shape))}")
    return arr


def problem_from_dict(doc: dict) -> MiqpProblem:
    if not isinstance(doc, dict):
        raise ProblemFileError("<root>", "expected a JSON object")
    for key in FIELDS:
        if key not in doc:
            raise ProblemFileError(key, "missing field")
    n, m = doc["n"], doc["m"]
    for key, val in (("n", n), ("m", m)):
        if isinstance(val, bool) or not isinstance(val, int) or val < 0:
            raise ProblemFileError(key, f"expected a non-negative integer, got {val!r}")
    H = _matrix("H", doc["H"], n, n)
    A = _matrix("A", doc["A"], m, n)
    if not isinstance(doc["f"], list):
        raise ProblemFileError("f", "expected an array")
    f = _matrix("f", [doc["f"]], 1, n)[0]
    bounds = {}
    for key in ("bl", "bu"):
        val = doc[key]
        if not isinstance(val, list):
            raise ProblemFileError(key, "expected an array")
        if len(val) != m:
            raise ProblemFileError(key, f"expected length {m}, got {len(val)}")
        bounds[key] = np.array([_bound(key, v) for v in val], dtype=float)
    binary = doc["binary"]
    if not isinstance(binary, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in binary):
        raise ProblemFileError("binary", "expected an array of integers")
    if any(i < 1 for i in binary):
        raise ProblemFileError("binary", "indices are 1-based")
    try:
        return MiqpProblem(H=H, f=f, A=A, bl=bounds["bl"], bu=bounds["bu"],
                           binary=tuple(i - 1 for i in binary))
    except ValueError as exc:
        field = str(exc).split(":", 1)[0]
        raise ProblemFileError(field if field in FIELDS else "<problem>", str(exc).split(": ", 1)[-1]) from None


def _encode_bound(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def problem_to_dict(prob: MiqpProblem) -> dict:
    return {
        "n": prob.n,
        "m": prob.m,
        "H": prob.H.tolist(),
        "f": prob.f.tolist(),
        "A": prob.A.tolist(),
        "bl": [_encode_bound(x) for x in prob.bl],
        "bu": [_encode_bound(x) for x in prob.bu],
        "binary": [i + 1 for i in prob.binary],
    }


def read_problem(path) -> MiqpProblem:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFileError("<json>", str(exc)) from None
    return problem_from_dict(doc)


def write_problem(prob: MiqpProblem, path):
    with open(path, "w") as fh:
        json.dump(problem_to_dict(prob), fh, indent=1)
        fh.write("\n")
