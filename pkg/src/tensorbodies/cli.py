"""Command-line interface.

Bodies are read and written as JSON body files (see ``tensorbodies.io``).
Scalars are printed as shortest round-tripping decimals, so a printed
value parses back to exactly the double the library returned.

Exit codes: 0 success, 1 ``certify`` rejected the body, 2 usage or input
errors, 3 numerical failures and complexity caps.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from .bm import MODES, bm_estimate
from .bodies import Body
from .calculus import (certify_tensorial, conv_tensor, ell_tensor, eta_retract, homotopy_eval,
                       polygonal_path, slice_normalize)
from .convex import hausdorff, minkowski_combination
from .errors import ComplexityError, DimensionError, NumericalError, PreconditionError
from .factories import lp_ball, random_polytope
from .io import BodyFileError, dumps, format_float, load_body
from .linalg import FactorMap, TensorShape
from .lowner import lowner
from .products import tensor_product

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    """Invalid command-line input detected after parsing."""


def _parse_point(text: str, dim: int) -> np.ndarray:
    try:
        x = np.array([float(s) for s in text.replace(";", ",").split(",") if s.strip()])
    except ValueError as exc:
        raise UsageError(f"cannot parse {text!r} as comma-separated numbers") from exc
    if x.shape != (dim,):
        raise UsageError(f"expected {dim} coordinates, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise UsageError("coordinates must be finite")
    return x


def _load(path: str, shape: str | None = None) -> Body:
    B = load_body(path)
    if shape is not None:
        B = B.with_shape(TensorShape.parse(shape))
    return B


def _emit(B: Body, out: str | None) -> None:
    text = dumps(B)
    if out is None or out == "-":
        print(text)
    else:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def _map_record(T) -> dict:
    if isinstance(T, FactorMap):
        return {"factors": [np.asarray(f).tolist() for f in T.factors], "perm": list(T.perm),
                "tensor_shape": list(T.shape.dims)}
    return {"matrix": np.asarray(T).tolist()}


def _write_json(rec: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(rec, fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_make(a) -> int:
    if a.kind == "lp-ball":
        if a.p is None:
            raise UsageError("lp-ball needs --p")
        B = lp_ball(a.p, a.dim, shape=a.shape)
    else:
        if a.gens is None:
            raise UsageError("random-polytope needs --gens")
        B = random_polytope(a.dim, a.gens, a.seed, shape=a.shape)
    _emit(B, a.output)
    return EXIT_OK


def cmd_tensor(a) -> int:
    if len(a.bodies) < 2:
        raise UsageError("tensor needs at least two factor bodies")
    factors = [_load(p) for p in a.bodies]
    _emit(tensor_product(a.op, factors), a.output)
    return EXIT_OK


def cmd_gauge(a) -> int:
    B = _load(a.body)
    for text in a.point:
        print(format_float(B.gauge(_parse_point(text, B.dim))))
    return EXIT_OK


def cmd_support(a) -> int:
    B = _load(a.body)
    for text in a.direction:
        print(format_float(B.support(_parse_point(text, B.dim))))
    return EXIT_OK


def cmd_polar(a) -> int:
    _emit(_load(a.body).polar(), a.output)
    return EXIT_OK


def cmd_sum(a) -> int:
    bodies = [_load(p) for p in a.bodies]
    weights = a.weights if a.weights is not None else [1.0] * len(bodies)
    if len(weights) != len(bodies):
        raise UsageError("one weight per body is needed")
    _emit(minkowski_combination(list(zip(weights, bodies))), a.output)
    return EXIT_OK


def cmd_hausdorff(a) -> int:
    print(format_float(hausdorff(_load(a.first), _load(a.second))))
    return EXIT_OK


def cmd_lowner(a) -> int:
    _emit(lowner(_load(a.body)), a.output)
    return EXIT_OK


def cmd_certify(a) -> int:
    cert = certify_tensorial(_load(a.body, a.shape), probes=a.probes, seed=a.seed)
    print(f"accepted {str(cert.accepted).lower()}")
    print(f"violation {format_float(cert.violation)}")
    print(f"lower_violation {format_float(cert.lower_violation)}")
    print(f"upper_violation {format_float(cert.upper_violation)}")
    print(f"probe_violation {format_float(cert.probe_violation)}")
    return EXIT_OK if cert.accepted else EXIT_REJECTED


def cmd_convtensor(a) -> int:
    _emit(conv_tensor(_load(a.body, a.shape)), a.output)
    return EXIT_OK


def cmd_elltensor(a) -> int:
    _emit(ell_tensor(_load(a.body, a.shape)), a.output)
    return EXIT_OK


def cmd_eta(a) -> int:
    _emit(eta_retract(_load(a.body, a.shape)), a.output)
    return EXIT_OK


def cmd_normalize(a) -> int:
    B, A = slice_normalize(_load(a.body, a.shape))
    _emit(B, a.output)
    if a.map_out:
        _write_json(_map_record(A), a.map_out)
    return EXIT_OK


def cmd_bm(a) -> int:
    res = bm_estimate(_load(a.first, a.shape), _load(a.second, a.shape), a.mode,
                      restarts=a.restarts, seed=a.seed, jobs=a.jobs)
    print(format_float(res.value))
    if a.map_out:
        rec = _map_record(res.map)
        rec.update(value=res.value, mode=res.mode, restarts=res.restarts, seed=a.seed)
        _write_json(rec, a.map_out)
    return EXIT_OK


def cmd_path(a) -> int:
    _emit(polygonal_path(_load(a.first, a.shape), _load(a.second, a.shape), a.t), a.output)
    return EXIT_OK


def cmd_homotopy(a) -> int:
    _emit(homotopy_eval(a.kind, _load(a.body, a.shape), a.t), a.output)
    return EXIT_OK


def cmd_reproduce(a) -> int:
    from .reproduce import reproduce_suite, write_report
    report = reproduce_suite(jobs=a.jobs, seed=a.seed, only=a.only)
    for rec in report["checks"]:
        flag = "PASS" if rec["passed"] else "FAIL"
        print(f"[{flag}] {rec['id']} {rec['anchor']} ({rec['seconds']:.2f} s)")
    write_report(report, a.out)
    return EXIT_OK if report["all_passed"] else EXIT_REJECTED


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _unit_interval(text: str) -> float:
    t = float(text)
    if not 0.0 <= t <= 1.0:
        raise argparse.ArgumentTypeError("t must lie in [0, 1]")
    return t


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tensorbodies",
                                     description="Convex geometry of tensorial bodies.")
    sub = parser.add_subparsers(dest="command", required=True)

    def body_cmd(name, fn, help_, *, out=True, shape=False):
        p = sub.add_parser(name, help=help_)
        p.add_argument("body", help="body file")
        if out:
            p.add_argument("-o", "--output", help="output body file (default stdout)")
        if shape:
            p.add_argument("--shape", help="tensor shape such as 2x2, overriding the file")
        p.set_defaults(func=fn)
        return p

    p = sub.add_parser("make", help="write a standard or random body")
    p.add_argument("--kind", choices=("lp-ball", "random-polytope"), required=True)
    p.add_argument("--p", help="1, 2 or inf (lp-ball)")
    p.add_argument("--dim", type=_positive_int, required=True)
    p.add_argument("--gens", type=_positive_int, help="generator count (random-polytope)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shape", help="attach a tensor shape such as 2x2")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_make)

    p = sub.add_parser("tensor", help="tensor product of two or three bodies")
    p.add_argument("--op", choices=("pi", "eps", "l2"), required=True)
    p.add_argument("bodies", nargs="+", help="factor body files")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_tensor)

    p = body_cmd("gauge", cmd_gauge, "gauge of points", out=False)
    p.add_argument("--point", action="append", required=True, help="comma-separated point")
    p = body_cmd("support", cmd_support, "support function of directions", out=False)
    p.add_argument("--direction", action="append", required=True,
                   help="comma-separated direction")
    body_cmd("polar", cmd_polar, "polar body")

    p = sub.add_parser("sum", help="Minkowski sum or weighted combination")
    p.add_argument("bodies", nargs="+")
    p.add_argument("--weights", type=float, nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sum)

    p = sub.add_parser("hausdorff", help="Hausdorff distance of two bodies")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_hausdorff)

    body_cmd("lowner", cmd_lowner, "Löwner ellipsoid")

    p = body_cmd("certify", cmd_certify, "decide whether a body is tensorial", out=False,
                 shape=True)
    p.add_argument("--probes", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)

    body_cmd("convtensor", cmd_convtensor, "projective retraction", shape=True)
    body_cmd("elltensor", cmd_elltensor, "tensorial Löwner ellipsoid", shape=True)
    body_cmd("eta", cmd_eta, "retraction onto tensorial bodies", shape=True)
    p = body_cmd("normalize", cmd_normalize, "move a tensorial body into the Löwner slice",
                 shape=True)
    p.add_argument("--map-out", help="write the normalising factor map as JSON")

    p = sub.add_parser("bm", help="upper bound on the Banach-Mazur distance")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--mode", choices=MODES, default="classical")
    p.add_argument("--restarts", type=_positive_int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--shape", help="tensor shape for both bodies")
    p.add_argument("--map-out", help="write the best map as JSON")
    p.set_defaults(func=cmd_bm)

    p = sub.add_parser("path", help="point on the polygonal path between two tensorial bodies")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--t", type=_unit_interval, required=True)
    p.add_argument("--shape")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_path)

    p = body_cmd("homotopy", cmd_homotopy, "evaluate the homotopy W, F or G", shape=True)
    p.add_argument("--kind", choices=("W", "F", "G"), type=str.upper, required=True)
    p.add_argument("--t", type=_unit_interval, required=True)

    p = sub.add_parser("reproduce", help="run the reproduction checks and write a report")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--only", nargs="+", help="check ids to run")
    p.set_defaults(func=cmd_reproduce)
    return parser


def run_command(argv: Sequence[str] | None = None) -> int:
    """Parse argv, run the subcommand and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    if getattr(args, "seed", 0) is None:
        from .reproduce import DEFAULT_SEED
        args.seed = DEFAULT_SEED
    try:
        return args.func(args)
    except (NumericalError, ComplexityError, ArithmeticError, np.linalg.LinAlgError) as exc:
        # LinAlgError subclasses ValueError, so this clause comes first
        print(f"tensorbodies {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, BodyFileError, DimensionError, PreconditionError, ValueError) as exc:
        print(f"tensorbodies {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
