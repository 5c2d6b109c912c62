"""JSON body files.

Explicit bodies use the flat kinds ``vpoly``, ``hpoly`` and ``ellipsoid``.
Structured bodies built by the library (products of non-polytopes, sums,
hulls, polars, images, slices) are stored as a tree of the same records so
that command-line steps can be chained without approximation.

Floats are written with ``repr``, the shortest decimal string that parses
back to the same double (at most 17 significant digits), so a round trip
is exact.
"""
from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Any

import numpy as np

from .bodies import (Body, ConvexHullUnion, Ellipsoid, HPolytope, Intersection, LinearImage,
                     MinkowskiSum, Polar, Polytope, ProjectiveProduct, SliceBody, VPolytope)
from .errors import DimensionError
from .linalg import TensorShape

FORMAT_VERSION = 1
FLAT_KINDS = ("vpoly", "hpoly", "ellipsoid")


class BodyFileError(ValueError):
    """Malformed or inconsistent body file."""


def _matrix(a) -> list:
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise BodyFileError("non-finite entries cannot be serialised")
    return a.tolist()


def _shape_field(B: Body):
    return None if B.shape is None else list(B.shape.dims)


def body_to_dict(B: Body) -> dict[str, Any]:
    """The JSON-ready record of a body."""
    out: dict[str, Any] = {"dim": B.dim}
    if B.shape is not None:
        out["tensor_shape"] = _shape_field(B)
    if isinstance(B, Polytope):
        # keep the representation the body was built from
        if B.primary == "H":
            out.update(kind="hpoly", data=_matrix(B.normals))
        else:
            out.update(kind="vpoly", data=_matrix(B.vertices))
        if B.product_factors is not None:
            out["product"] = {"op": B.product_kind,
                              "factors": [body_to_dict(f) for f in B.product_factors]}
    elif isinstance(B, Ellipsoid):
        out.update(kind="ellipsoid", data=_matrix(B.M))
    elif isinstance(B, ProjectiveProduct):
        out.update(kind="product", op="pi", factors=[body_to_dict(f) for f in B.factors])
    elif isinstance(B, Polar):
        if B.product_kind == "eps" and B.product_factors is not None:
            out.update(kind="product", op="eps",
                       factors=[body_to_dict(f) for f in B.product_factors])
        else:
            out.update(kind="polar", base=body_to_dict(B.base))
    elif isinstance(B, MinkowskiSum):
        out.update(kind="sum", terms=[[float(c), body_to_dict(b)] for c, b in B.terms])
    elif isinstance(B, ConvexHullUnion):
        out.update(kind="hull", parts=[body_to_dict(p) for p in B.parts])
    elif isinstance(B, Intersection):
        out.update(kind="intersection", parts=[body_to_dict(p) for p in B.parts])
    elif isinstance(B, LinearImage):
        out.update(kind="image", matrix=_matrix(B.T), base=body_to_dict(B.base))
    elif isinstance(B, SliceBody):
        out.update(kind="slice", embedding=_matrix(B.E), scale=float(B.scale),
                   base=body_to_dict(B.base))
    else:
        raise BodyFileError(f"no file format for bodies of type {type(B).__name__}")
    if B.product_kind == "tensorial" and "product" not in out:
        out["product"] = {"op": "tensorial",
                          "factors": [body_to_dict(f) for f in B.product_factors]}
    return out


def _array(rec, key, dim=None) -> np.ndarray:
    try:
        a = np.array(rec[key], dtype=float)
    except KeyError as exc:
        raise BodyFileError(f"missing field {key!r}") from exc
    except (TypeError, ValueError) as exc:
        raise BodyFileError(f"field {key!r} is not a numeric array") from exc
    if a.ndim != 2:
        raise BodyFileError(f"field {key!r} must be a 2-d array")
    if dim is not None and a.shape[1] != dim:
        raise BodyFileError(f"field {key!r} has rows of length {a.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(a)):
        raise BodyFileError(f"field {key!r} has non-finite entries")
    return a


def body_from_dict(rec: dict[str, Any], _memo: dict | None = None) -> Body:
    """Inverse of body_to_dict, with consistency checks.

    Identical factor records load as one object, so that containments that
    follow from shared factors can still be recognised after a round trip.
    """
    from .products import injective_product, projective_product

    memo = {} if _memo is None else _memo

    def factor(f):
        key = json.dumps(f, sort_keys=True)
        if key not in memo:
            memo[key] = body_from_dict(f, memo)
        return memo[key]

    def sub(f):
        return body_from_dict(f, memo)

    if not isinstance(rec, dict):
        raise BodyFileError("a body record must be a JSON object")
    kind = rec.get("kind")
    try:
        dim = int(rec["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BodyFileError("missing or invalid 'dim'") from exc
    shape = rec.get("tensor_shape")
    if shape is not None:
        shape = TensorShape(tuple(int(d) for d in shape))
        if shape.total != dim:
            raise BodyFileError(f"tensor_shape {list(shape.dims)} does not multiply to dim {dim}")
    try:
        if kind == "vpoly":
            B = VPolytope(_array(rec, "data", dim), shape=shape)
        elif kind == "hpoly":
            B = HPolytope(_array(rec, "data", dim), shape=shape)
        elif kind == "ellipsoid":
            M = _array(rec, "data", dim)
            if M.shape != (dim, dim):
                raise BodyFileError("shape_matrix must be dim x dim")
            if np.abs(M - M.T).max() > 1e-12 * max(1.0, np.abs(M).max()):
                raise BodyFileError("shape_matrix is not symmetric")
            B = Ellipsoid(M, shape=shape)
        elif kind == "product":
            factors = [factor(f) for f in rec["factors"]]
            make = {"pi": projective_product, "eps": injective_product}.get(rec.get("op"))
            if make is None:
                raise BodyFileError(f"unknown product op {rec.get('op')!r}")
            if shape is None:
                shape = TensorShape(tuple(f.dim for f in factors))
            B = make(factors, shape)
        elif kind == "polar":
            B = Polar(sub(rec["base"]))
        elif kind == "sum":
            B = MinkowskiSum([(float(c), sub(b)) for c, b in rec["terms"]])
        elif kind == "hull":
            B = ConvexHullUnion([sub(p) for p in rec["parts"]])
        elif kind == "intersection":
            B = Intersection([sub(p) for p in rec["parts"]])
        elif kind == "image":
            B = LinearImage(sub(rec["base"]), _array(rec, "matrix", dim))
        elif kind == "slice":
            B = SliceBody(sub(rec["base"]), _array(rec, "embedding"),
                          float(rec["scale"]))
        else:
            raise BodyFileError(f"unknown body kind {kind!r}")
    except KeyError as exc:
        raise BodyFileError(f"missing field {exc.args[0]!r} in a {kind} record") from exc
    except DimensionError as exc:
        raise BodyFileError(str(exc)) from exc
    if B.dim != dim:
        raise BodyFileError(f"record declares dim {dim} but describes a body of dim {B.dim}")
    if shape is not None and B.shape != shape:
        B = B.with_shape(shape)
    meta = rec.get("product")
    if meta is not None and (isinstance(B, Polytope) or meta.get("op") == "tensorial"):
        B.product_kind = meta["op"]
        B.product_factors = tuple(factor(f) for f in meta["factors"])
    return B


_NUMBER_ROW = re.compile(r"\[\s*(-?[0-9][^\[\]{}\"]*?)\s*\]")


def dumps(B: Body) -> str:
    """Indented JSON with each innermost numeric row on one line."""
    rec = {"format": FORMAT_VERSION}
    rec.update(body_to_dict(B))
    text = json.dumps(rec, indent=1, allow_nan=False)
    return _NUMBER_ROW.sub(lambda m: "[" + re.sub(r",\s+", ", ", m.group(1)) + "]", text)


def loads(text: str) -> Body:
    try:
        rec = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise BodyFileError(f"invalid JSON: {exc}") from exc
    return body_from_dict(rec)


def _reject_constant(name: str):
    raise BodyFileError(f"non-finite constant {name} in body file")


def save_body(B: Body, path) -> None:
    Path(path).write_text(dumps(B) + "\n")


def load_body(path) -> Body:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise BodyFileError(f"cannot read {path}: {exc.strerror}") from exc
    return loads(text)


def format_float(x: float) -> str:
    """Shortest round-tripping decimal for a double."""
    x = float(x)
    return repr(x) if math.isfinite(x) else str(x)
