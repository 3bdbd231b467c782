"""JSON problem files: schema, validation with line numbers, and loading."""

from __future__ import annotations

import json
from dataclasses import dataclass

import jsonschema
import numpy as np

from . import lp_bridge as lp
from . import sdp_bridge as sdp
from .errors import CramerBridgeError
from .maxent_core import BoxQuadrature, MaxentProblem, SolverOptions

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_MAT = {"type": "array", "items": _VEC, "minItems": 1}
_LOWER = {"type": "array", "items": _VEC, "minItems": 1, "description": "lower triangle, row i holds i+1 entries"}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "cramer-bridge problem file",
    "type": "object",
    "required": ["kind", "y"],
    "properties": {
        "kind": {"enum": ["lp", "sdp", "box"]},
        "y": _VEC,
        "lambda0": _VEC,
        "A": _MAT,
        "c": _VEC,
        "A0": _LOWER,
        "A_js": {"type": "array", "items": _LOWER, "minItems": 1},
        "bounds": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}, "minItems": 1},
        "density_id": {"type": "string"},
        "map_id": {"type": "string"},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grad_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
                "fraction_to_boundary": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "armijo_c": {"type": "number", "exclusiveMinimum": 0},
                "divergence_norm_bound": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"kind": {"const": "lp"}}}, "then": {"required": ["A", "c"]}},
        {"if": {"properties": {"kind": {"const": "sdp"}}}, "then": {"required": ["A0", "A_js"]}},
        {"if": {"properties": {"kind": {"const": "box"}}}, "then": {"required": ["bounds", "density_id", "map_id"]}},
    ],
}


class ProblemFileError(ValueError):
    """Malformed or schema-violating problem file; message carries a line number."""


@dataclass(frozen=True, eq=False)
class LoadedProblem:
    kind: str
    problem: MaxentProblem
    instance: object  # LPInstance, SDPInstance or None for box
    options: SolverOptions
    raw: dict


def _line_of(text: str, path) -> int:
    """Best-effort line of the deepest object key on ``path``."""
    keys = [p for p in path if isinstance(p, str)]
    pos = 0
    for k in keys:
        hit = text.find(f'"{k}"', pos)
        if hit < 0:
            break
        pos = hit
    return text.count("\n", 0, pos) + 1


def _lower_to_full(rows, name):
    n = len(rows)
    M = np.zeros((n, n))
    for i, row in enumerate(rows):
        if len(row) != i + 1:
            raise ProblemFileError(f"{name}: row {i} of a lower triangle must have {i + 1} entries, got {len(row)}")
        M[i, : i + 1] = row
        M[: i + 1, i] = row
    return M


def parse_problem(text: str, source: str = "<input>") -> LoadedProblem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(doc), key=lambda e: list(map(str, e.path)))
    if errors:
        e = errors[0]
        where = "/".join(map(str, e.path)) or "(root)"
        raise ProblemFileError(f"{source}:{_line_of(text, e.path)}: {where}: {e.message}")
    opts = SolverOptions(**doc.get("solver", {}))
    kind = doc["kind"]
    lam0 = doc.get("lambda0")
    try:
        if kind == "lp":
            inst = lp.normalize_instance(doc["A"], doc["c"], doc["y"], lambda0=lam0)
            problem = inst.to_problem()
        elif kind == "sdp":
            A0 = _lower_to_full(doc["A0"], "A0")
            A_js = [_lower_to_full(a, f"A_js[{j}]") for j, a in enumerate(doc["A_js"])]
            inst = sdp.normalize_sdp_instance(A0, A_js, doc["y"], lambda0=lam0)
            problem = inst.to_problem()
        else:
            inst = None
            box = BoxQuadrature(tuple(map(tuple, doc["bounds"])), doc["density_id"], doc["map_id"])
            problem = MaxentProblem(box, doc["y"])
    except ProblemFileError as exc:
        raise ProblemFileError(f"{source}: {exc}") from None
    except (ValueError, CramerBridgeError) as exc:
        raise ProblemFileError(f"{source}: {type(exc).__name__}: {exc}") from None
    return LoadedProblem(kind, problem, inst, opts, doc)


def load_problem(path: str) -> LoadedProblem:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProblemFileError(f"{path}: {exc.strerror}") from None
    return parse_problem(text, path)
