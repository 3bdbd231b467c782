"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 numerical non-convergence or a
residual above tolerance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import fiber_geometry as fg
from . import lp_bridge as lp
from . import sdp_bridge as sdp
from . import verify
from .errors import CramerBridgeError
from .maxent_core import SDPCone, solve_dual
from .problem_file import SCHEMA, ProblemFileError, load_problem

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
DEFAULT_SEED = 42


class InputError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("CRAMER_BRIDGE_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"CRAMER_BRIDGE_SEED must be an integer, got {raw!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _range(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
    if step <= 0 or stop <= start:
        raise argparse.ArgumentTypeError("need start < stop and step > 0")
    n = int(round((stop - start) / step))
    return start + step * np.arange(n + 1)


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def run_solve(args) -> int:
    loaded = load_problem(args.path)
    res = solve_dual(loaded.problem, loaded.options)
    report = res.to_dict()
    inst = loaded.instance
    if inst is not None and inst.lambda0 is not None:
        report["normalization"] = {"lambda0": [float(v) for v in inst.lambda0], "shift": float(inst.shift)}
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if res.converged else EXIT_NUMERIC


def run_sweep(args) -> int:
    loaded = load_problem(args.path)
    if loaded.kind == "lp":
        rows = lp.theorem_lp_identity_report(loaded.instance, args.eps)
    elif loaded.kind == "sdp":
        rows = sdp.theorem_sdp_identity_report(loaded.instance, args.eps)
    else:
        raise InputError("sweep requires lp or sdp")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "tau_eps", "eps_theta", "residual"])
    for r in rows:
        w.writerow([repr(float(v)) for v in r.as_tuple()])
    _emit(buf.getvalue(), args.out)
    worst = max(r.residual for r in rows)
    if worst > args.tol:
        print(f"residual {worst!r} exceeds --tol {args.tol!r}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def run_density(args) -> int:
    loaded = load_problem(args.path)
    b = loaded.problem.backend
    if loaded.kind != "lp" and args.method != "mc-histogram":
        raise InputError(f"method {args.method} requires an lp problem")
    if isinstance(b, SDPCone):
        raise InputError("no fiber density estimate for sdp problems")
    grids = args.grid
    if len(grids) != b.m:
        raise InputError(f"need one --grid per moment coordinate ({b.m}), got {len(grids)}")
    if args.method == "mc-histogram":
        edges = grids[0] if b.m == 1 else grids
        est = fg.pushforward_histogram(loaded.problem, args.samples, edges, args.seed)
    else:
        pts = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, b.m)
        est = fg.fiber_density_estimate(b.A, b.c, pts, args.method)
    _emit(est.to_csv(), args.out)
    return EXIT_OK


def run_verify(args) -> int:
    if args.suite not in verify.SUITES + ("all",):
        raise InputError(f"unknown suite {args.suite!r}; choose from {', '.join(verify.SUITES + ('all',))}")
    seed = args.seed if args.seed is not None else _default_seed()
    report = verify.run_suite(args.suite, seed)
    _emit(verify.report_json(report), args.out)
    return EXIT_OK if report["passed"] else EXIT_NUMERIC


def run_schema(args) -> int:
    _emit(json.dumps(SCHEMA, indent=2) + "\n", args.out)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cramer-bridge", description="Max-entropy duals, barrier identities and fiber densities.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve the max-entropy dual and print the result as JSON")
    s.add_argument("path")
    s.set_defaults(func=run_solve)

    s = sub.add_parser("sweep", help="epsilon sweep of the barrier / max-entropy identity as CSV")
    s.add_argument("path")
    s.add_argument("--eps", type=_float_list, default=[1.0, 0.1, 0.01], help="comma-separated epsilons (default 1,0.1,0.01)")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--out")
    s.set_defaults(func=run_sweep)

    s = sub.add_parser("density", help="fiber density on a grid as CSV (lp problems, or histograms)")
    s.add_argument("path")
    s.add_argument("--grid", type=_range, action="append", required=True, help="start:stop:step, once per moment coordinate")
    s.add_argument("--method", choices=fg.METHODS, default="quadrature")
    s.add_argument("--samples", type=int, default=10**6)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=run_density)

    s = sub.add_parser("verify", help="run a verification suite and print a JSON report")
    s.add_argument("--suite", default="all")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=run_verify)

    s = sub.add_parser("schema", help="print the problem-file JSON schema")
    s.add_argument("--out")
    s.set_defaults(func=run_schema)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", "absent") is None:
        try:
            args.seed = _default_seed()
        except InputError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except (ProblemFileError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, CramerBridgeError) as exc:
        # ValueError subclasses here are precondition failures on user data
        code = EXIT_INPUT if isinstance(exc, ValueError) else EXIT_NUMERIC
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
