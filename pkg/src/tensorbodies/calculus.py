"""Factor extraction, certification of tensorial bodies and the maps built on them.

A body P in a tensor space is tensorial with respect to factor bodies
P_1, ..., P_l when

    P_1 (x)_pi ... (x)_pi P_l  <=  P  <=  P_1 (x)_eps ... (x)_eps P_l.

Candidate factors are read off from slices of P through e_1 (x) ... (x) e_1,
normalised so that every slot but the last has gauge 1 at e_1; that choice
fixes the scalar freedom (P_i -> c_i P_i with prod c_i = 1) once and for all.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bodies import Body, Ellipsoid, HPolytope, SliceBody, numeric_tolerance
from .convex import (conv_union, hausdorff, inscribed_polygon, intersect, minkowski_combination,
                     nu, provably_contained)
from .errors import DimensionError, PreconditionError
from .linalg import FactorMap, TensorShape, embed_slot, kron_rows
from .lowner import lowner, normalize_lowner, xi
from .products import hilbert_product, injective_product, projective_product

CERT_TOL = 1e-6


def _shape_of(P: Body) -> TensorShape:
    if P.shape is None:
        raise PreconditionError("the body carries no tensor shape")
    return P.shape


def _e1_tensor(shape: TensorShape) -> np.ndarray:
    x = np.zeros(shape.total)
    x[0] = 1.0
    return x


# ---------------------------------------------------------------------------
# factor extraction and certification
# ---------------------------------------------------------------------------

def extract_factors(P: Body) -> list[Body]:
    """Slices of P through e_1 (x) ... (x) e_1.

    For i < l the factor is {x : (e_1 .. x .. e_1) / g_P(e_1 (x) ... (x) e_1) in P}
    and the last factor is {x : e_1 (x) ... (x) e_1 (x) x in P}.
    """
    shape = _shape_of(P)
    c = P.gauge(_e1_tensor(shape))
    l = shape.order
    scales = [c] * (l - 1) + [1.0]
    if P.is_polytope:
        A = P.normals
        return [HPolytope((A @ embed_slot(shape, i)) / scales[i]) for i in range(l)]
    if isinstance(P, Ellipsoid):
        # a section of an ellipsoid is an ellipsoid
        return [Ellipsoid(embed_slot(shape, i).T @ P.M @ embed_slot(shape, i) / scales[i] ** 2)
                for i in range(l)]
    if P.product_factors is not None and P.product_kind in ("pi", "eps", "l2", "tensorial"):
        # known factorisation: slices are rescaled factors
        F = P.product_factors
        g1 = [f.gauge(np.eye(f.dim)[0]) for f in F]
        c = [g1[i] for i in range(l - 1)] + [1.0 / float(np.prod(g1[:-1]))]
        # keep the factor objects when already normalised, so that
        # provably_contained can match them
        return [f if abs(ci - 1.0) <= 1e-12 else f.scaled(ci) for f, ci in zip(F, c)]
    return [SliceBody(P, embed_slot(shape, i), scales[i]) for i in range(l)]


@dataclass
class Certificate:
    """Outcome of a tensoriality check."""

    accepted: bool
    factors: list[Body]
    scale: float
    lower_violation: float
    upper_violation: float
    probe_violation: float
    probe_count: int
    tolerance: float = CERT_TOL
    extra: dict = field(default_factory=dict)

    @property
    def violation(self) -> float:
        return max(self.lower_violation, self.upper_violation, self.probe_violation)


def random_decomposables(shape: TensorShape, n: int, rng: np.random.Generator):
    """n random unit factor tuples and their flattened Kronecker products."""
    parts = []
    for d in shape.dims:
        x = rng.standard_normal((n, d))
        parts.append(x / np.linalg.norm(x, axis=1, keepdims=True))
    return parts, kron_rows(parts)


def crossnorm_error(P: Body, factors: Sequence[Body], n: int = 200, seed: int = 0) -> float:
    """max relative deviation of g_P(x_1 (x) ... (x) x_l) from prod g_{P_i}(x_i)."""
    shape = _shape_of(P)
    parts, X = random_decomposables(shape, n, np.random.default_rng(seed))
    lhs = P.gauges(X)
    rhs = np.prod([f.gauges(x) for f, x in zip(factors, parts)], axis=0)
    return float(np.max(np.abs(lhs - rhs) / rhs))


def certify_tensorial(P: Body, probes: int = 200, *, tol: float = CERT_TOL,
                      seed: int = 0) -> Certificate:
    """Check the sandwich between the pi- and eps-products of the extracted factors."""
    shape = _shape_of(P)
    factors = extract_factors(P)
    scale = P.gauge(_e1_tensor(shape))
    Pi = projective_product(factors, shape)
    Eps = injective_product(factors, shape)
    lower = 0.0 if provably_contained(Pi, P) else max(0.0, nu(Pi, P) - 1.0)
    upper = 0.0 if provably_contained(P, Eps) else max(0.0, nu(P, Eps) - 1.0)
    # probes only need to resolve violations well below tol
    with numeric_tolerance(1e-3 * tol):
        probe = crossnorm_error(P, factors, probes, seed) if probes > 0 else 0.0
    ok = lower <= tol and upper <= tol and probe <= tol
    return Certificate(ok, factors, scale, lower, upper, probe, probes, tol)


def _require_tensorial(P: Body) -> list[Body]:
    cert = certify_tensorial(P)
    if not cert.accepted:
        raise PreconditionError(f"body is not tensorial (violation {cert.violation:.3e})")
    return cert.factors


# ---------------------------------------------------------------------------
# retractions
# ---------------------------------------------------------------------------

def conv_tensor(P: Body, *, check: bool = True) -> Body:
    """Convex hull of the decomposable points of a tensorial body: pi-product of its factors."""
    factors = _require_tensorial(P) if check else extract_factors(P)
    return projective_product(factors, _shape_of(P))


def ell_tensor(P: Body, *, check: bool = True) -> Ellipsoid:
    """Löwner ellipsoid of conv_tensor(P)."""
    shape = _shape_of(P)
    factors = _require_tensorial(P) if check else extract_factors(P)
    if all(f.is_polytope for f in factors):
        return lowner(projective_product(factors, shape))
    # Low(P_1 (x)_pi ... (x)_pi P_l) is the Hilbertian product of the factor ellipsoids
    return hilbert_product([lowner(f) for f in factors], shape)


def eta_retract(P: Body) -> Body:
    """conv(P u (x)_pi P^i) n (x)_eps P^i with P^i the extracted factors."""
    shape = _shape_of(P)
    factors = extract_factors(P)
    if P.is_polytope:
        Pi = projective_product(factors, shape)
        Eps = injective_product(factors, shape)
        return _with_shape(intersect(conv_union(P, Pi), Eps), shape)
    Pi = projective_product(factors, shape)
    Eps = injective_product(factors, shape)
    if _contained(Pi, P) and _contained(P, Eps):
        return P
    # planar factors known only through slices make every later oracle call
    # nest several numeric solvers; swap them for inscribed polygons, which
    # changes the factors by at most ETA_POLYGON_TOL in gauge
    if any(isinstance(f, SliceBody) and f.dim == 2 for f in factors):
        factors = [_polygon_factor(f) if isinstance(f, SliceBody) and f.dim == 2 else f
                   for f in factors]
        Pi = projective_product(factors, shape)
        Eps = injective_product(factors, shape)
    out = _with_shape(intersect(conv_union(P, Pi), Eps), shape)
    out.product_kind = "tensorial"
    out.product_factors = tuple(factors)
    return out


ETA_POLYGON_TOL = 1e-4
_REDUNDANT_TOL = 1e-10


def _contained(A: Body, B: Body) -> bool:
    return provably_contained(A, B) or nu(A, B) <= 1.0 + _REDUNDANT_TOL


def _polygon_factor(f: Body) -> Body:
    """Inscribed polygon of a planar factor, keeping its point on the e_1 ray."""
    e1 = np.array([1.0, 0.0])
    return inscribed_polygon(f, ETA_POLYGON_TOL, anchors=e1 / f.gauge(e1))


def _with_shape(B: Body, shape: TensorShape) -> Body:
    return B if B.shape == shape else B.with_shape(shape)


def slice_normalize(P: Body, *, check: bool = True) -> tuple[Body, FactorMap]:
    """(A^{-1} P, A) with A = xi(ell_tensor(P)).

    A is returned as the factor map (xi(Low(P^1)), ..., xi(Low(P^l))), whose
    Kronecker product is xi of the Hilbertian product of the factor
    ellipsoids, i.e. xi(ell_tensor(P)).
    """
    shape = _shape_of(P)
    factors = _require_tensorial(P) if check else extract_factors(P)
    A = FactorMap(tuple(xi(lowner(f)) for f in factors), shape=shape)
    return _with_shape(P.linear_image(A.inverse()), shape), A


def lowner_factors(P: Body, *, check: bool = True) -> list[Body]:
    """The factors of P moved to Löwner position; for P in the slice their pi-product is P's conv_tensor."""
    factors = _require_tensorial(P) if check else extract_factors(P)
    return [normalize_lowner(f)[0] for f in factors]


# ---------------------------------------------------------------------------
# sums, homotopies and paths
# ---------------------------------------------------------------------------

def _factor_distance(A: Body, B: Body) -> float:
    scale = max(A.circumradius(), B.circumradius())
    return hausdorff(A, B) / scale


def shared_factor_sum(P: Body, R: Body, slot: int, lam: float = 1.0, *,
                      tol: float = 1e-6) -> Body:
    """P + lam R for tensorial P, R whose factors agree outside ``slot`` (0-based).

    Raises PreconditionError naming the differing slots otherwise.
    """
    shape = _shape_of(P)
    if R.shape != shape:
        raise DimensionError("the summands carry different tensor shapes")
    if lam <= 0:
        raise PreconditionError("lam must be positive")
    fP, fR = _require_tensorial(P), _require_tensorial(R)
    l = shape.order
    last = l - 1
    differ = []
    for i in range(l):
        if i == slot:
            continue
        a, b = fP[i], fR[i]
        if i == last:
            # the last slot carries the overall scale; compare up to a positive factor
            e = np.eye(a.dim)[0]
            b = b.scaled(b.gauge(e) / a.gauge(e))
        if _factor_distance(a, b) > tol:
            differ.append(i)
    if differ:
        raise PreconditionError(
            f"factors differ in slots {differ} besides slot {slot}; the sum need not be tensorial")
    out = minkowski_combination([(1.0, P), (float(lam), R)])
    return _with_shape(out, shape)


def homotopy_W(P: Body, t: float, *, check: bool = True) -> Body:
    """(1 - t) P + t conv_tensor(P)."""
    _check_t(t)
    C = conv_tensor(P, check=check)
    return _with_shape(minkowski_combination([(1.0 - t, P), (t, C)]), _shape_of(P))


def _in_slice(P: Body, tol: float = 1e-4) -> bool:
    E = ell_tensor(P, check=False)
    return bool(np.abs(E.M - np.eye(P.dim)).max() <= tol)


def homotopy_F(P: Body, t: float, *, check: bool = True) -> Body:
    """pi-product over i of (1 - t) f_i(P) + t B_2, f_i the Löwner-position factors."""
    _check_t(t)
    shape = _shape_of(P)
    if check:
        factors = _require_tensorial(P)
        C = projective_product(factors, shape)
        if max(nu(P, C), nu(C, P)) > 1.0 + 1e-6:
            raise PreconditionError("F is defined on projective products only")
        if not _in_slice(P):
            raise PreconditionError("F is defined on the Löwner slice only")
    f = lowner_factors(P, check=False)
    parts = [minkowski_combination([(1.0 - t, fi), (t, Ellipsoid.ball(fi.dim))]) for fi in f]
    return projective_product(parts, shape)


def homotopy_G(P: Body, t: float, *, check: bool = True) -> Body:
    """W(P, 2t) on [0, 1/2] followed by F(conv_tensor(P), 2t - 1)."""
    _check_t(t)
    if check and not _in_slice(P):
        raise PreconditionError("G is defined on the Löwner slice only")
    if t <= 0.5:
        return homotopy_W(P, 2.0 * t, check=check)
    return homotopy_F(conv_tensor(P, check=check), 2.0 * t - 1.0, check=False)


def homotopy_eval(kind: str, P: Body, t: float, *, check: bool = True) -> Body:
    kinds = {"W": homotopy_W, "F": homotopy_F, "G": homotopy_G}
    try:
        fn = kinds[kind.upper()]
    except KeyError:
        raise ValueError(f"unknown homotopy {kind!r}") from None
    return fn(P, t, check=check)


def _check_t(t: float):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")


def polygonal_path(P: Body, R: Body, t: float, *, check: bool = True) -> Body:
    """Two-segment path P -> K -> R with K = P^1 (x)_pi R^2."""
    _check_t(t)
    shape = _shape_of(P)
    if shape.order != 2 or R.shape != shape:
        raise PreconditionError("the path joins two bodies on the same two-factor shape")
    fP = _require_tensorial(P) if check else extract_factors(P)
    fR = _require_tensorial(R) if check else extract_factors(R)
    K = projective_product([fP[0], fR[1]], shape)
    if t <= 0.5:
        terms = [(1.0 - 2.0 * t, P), (2.0 * t, K)]
    else:
        terms = [(2.0 - 2.0 * t, K), (2.0 * t - 1.0, R)]
    return _with_shape(minkowski_combination(terms), shape)


# ---------------------------------------------------------------------------
# lifting of factor maps
# ---------------------------------------------------------------------------

FactorFn = Callable[[Body], Body]


def lift_eval(P: Body, factor_maps: Sequence[FactorFn], *, check: bool = True,
              tol: float = 1e-4) -> Body:
    """conv(P u (x)_pi f_i(Pbar_i)) n (x)_eps f_i(Pbar_i), Pbar_i the Löwner-position factors."""
    shape = _shape_of(P)
    if check and not _in_slice(P):
        raise PreconditionError("the lift is defined on the Löwner slice")
    bars = lowner_factors(P, check=check)
    if len(factor_maps) != len(bars):
        raise DimensionError("one factor map per slot is needed")
    images = [f(b) for f, b in zip(factor_maps, bars)]
    for i, Q in enumerate(images):
        if Q.dim != bars[i].dim:
            raise DimensionError(f"factor map {i} changed the dimension")
        E = lowner(Q)
        if np.abs(E.M - np.eye(Q.dim)).max() > tol:
            raise PreconditionError(f"factor map {i} leaves the Löwner position")
    Pi = projective_product(images, shape)
    Eps = injective_product(images, shape)
    return _with_shape(intersect(conv_union(P, Pi), Eps), shape)


def lift_error_bound(P: Body, factor_maps: Sequence[FactorFn]) -> float:
    """Upper bound on the Hausdorff distance between lift_eval(P, maps) and P.

    Let eta bound the distances between the pi-products and between the
    eps-products of the mapped and the original factors.  The hull with
    the union moves by at most eta, so both containment factors between
    lift and P are at most 1 + eta / r, where r bounds the inradii from
    below; with R bounding the circumradii the distance is at most eta R / r.
    """
    shape = _shape_of(P)
    bars = lowner_factors(P, check=False)
    images = [f(b) for f, b in zip(factor_maps, bars)]
    Pi_new = projective_product(images, shape)
    Eps_new = injective_product(images, shape)
    eta = max(hausdorff(Pi_new, projective_product(bars, shape)),
              hausdorff(Eps_new, injective_product(bars, shape)))
    r = min(P.inradius(), Eps_new.inradius())
    R = max(P.circumradius(), Pi_new.circumradius())
    return float(eta * R / r)
