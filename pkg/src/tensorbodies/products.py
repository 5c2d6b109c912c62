"""Projective, injective and Hilbertian tensor products of bodies.

Polytope factors give polytopes: the projective product is the symmetric
hull of all Kronecker products of factor vertices, and the injective
product is cut out by the Kronecker products of factor facet normals
(the vertices of the polar factors).  Extreme points of a projective
product are exactly the products of extreme points of the factors, so
the Kronecker vertex set only needs de-duplication up to sign; the hull
prune is kept as a cheap safety net where facet enumeration is allowed.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import polytope as pt
from .bodies import Body, Ellipsoid, HPolytope, Polar, ProjectiveProduct, VPolytope
from .errors import ComplexityError, DimensionError, PreconditionError
from .linalg import TensorShape, kron_all

MAX_ORDER = 3
MAX_PRODUCT_DIM = 16


def _check_factors(Ps: Sequence[Body], shape) -> TensorShape:
    shape = TensorShape.parse(shape)
    if len(Ps) != shape.order:
        raise DimensionError(f"{len(Ps)} factors for a shape of order {shape.order}")
    for i, (P, d) in enumerate(zip(Ps, shape.dims)):
        if P.dim != d:
            raise DimensionError(f"factor {i} has dimension {P.dim}, slot expects {d}")
    if shape.order > MAX_ORDER or shape.total > MAX_PRODUCT_DIM:
        raise ComplexityError(f"products are limited to {MAX_ORDER} factors and total "
                              f"dimension {MAX_PRODUCT_DIM}, got {shape}")
    return shape


def _kron_rows(sets: Sequence[np.ndarray]) -> np.ndarray:
    # products of extreme points are extreme in a pi-product, so pruned factor
    # vertices give pruned product vertices (and dually for facet normals)
    return pt.unique_up_to_sign(kron_all(sets), 1e-12)


def projective_product(Ps: Sequence[Body], shape) -> Body:
    """P_1 (x)_pi ... (x)_pi P_l."""
    Ps = list(Ps)
    shape = _check_factors(Ps, shape)
    if all(P.is_polytope for P in Ps):
        G = _kron_rows([P.vertices for P in Ps])
        out = VPolytope(G, shape=shape, prune=False)
    else:
        out = ProjectiveProduct(Ps, shape)
    out.product_kind = "pi"
    out.product_factors = tuple(Ps)
    return out


def injective_product(Ps: Sequence[Body], shape) -> Body:
    """P_1 (x)_eps ... (x)_eps P_l = (P_1° (x)_pi ... (x)_pi P_l°)°."""
    Ps = list(Ps)
    shape = _check_factors(Ps, shape)
    if all(P.is_polytope for P in Ps):
        A = _kron_rows([P.normals for P in Ps])
        out = HPolytope(A, shape=shape, prune=False)
    else:
        out = Polar(ProjectiveProduct([P.polar() for P in Ps], shape))
    out.product_kind = "eps"
    out.product_factors = tuple(Ps)
    return out


def hilbert_product(Es: Sequence[Ellipsoid], shape) -> Ellipsoid:
    """(A_1 (x) ... (x) A_l)(B_2) with A_i the SPD representative of E_i."""
    Es = list(Es)
    shape = _check_factors(Es, shape)
    if not all(isinstance(E, Ellipsoid) for E in Es):
        raise PreconditionError("the Hilbertian product takes ellipsoids")
    # (A1 (x) A2)^{-2} = A1^{-2} (x) A2^{-2} = M1 (x) M2
    M = Es[0].M
    for E in Es[1:]:
        M = np.kron(M, E.M)
    out = Ellipsoid(M, shape=shape)
    out.product_kind = "l2"
    out.product_factors = tuple(Es)
    return out


def tensor_product(kind: str, Ps: Sequence[Body], shape=None) -> Body:
    """Dispatch on ``kind`` in {"pi", "eps", "l2"}; the shape defaults to the factor dims."""
    if shape is None:
        shape = TensorShape(tuple(P.dim for P in Ps))
    kind = kind.lower()
    if kind == "pi":
        return projective_product(Ps, shape)
    if kind == "eps":
        return injective_product(Ps, shape)
    if kind in ("l2", "2", "hilbert"):
        return hilbert_product(Ps, shape)
    raise ValueError(f"unknown tensor product {kind!r}")


def euclidean_product(kind: str, shape) -> Body:
    """B_2^{d_1} (x)_kind ... (x)_kind B_2^{d_l}."""
    shape = TensorShape.parse(shape)
    return tensor_product(kind, [Ellipsoid.ball(d) for d in shape.dims], shape)
