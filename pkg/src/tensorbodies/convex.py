"""Operations on 0-symmetric convex bodies.

Polytope inputs give polytope outputs (with pruned representations); inputs
involving non-polytopes give structured bodies from :mod:`bodies`.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct

import numpy as np

from . import polytope as pt
from .bodies import (numeric_tolerance, Body, ConvexHullUnion, Ellipsoid, HPolytope, Intersection,
                     LinearImage, MinkowskiSum, Polar, Polytope, ProjectiveProduct, SliceBody,
                     VPolytope)
from .errors import DimensionError, NumericalError, PreconditionError
from .linalg import FactorMap
from .sphere import direction_cloud, normalize_blocks, sphere_maximize

GRID_TOL = 1e-4
COARSE_TOL = 1e-7


def _check_same_dim(P: Body, Q: Body):
    if P.dim != Q.dim:
        raise DimensionError(f"bodies live in dimensions {P.dim} and {Q.dim}")


def _common_shape(P: Body, Q: Body):
    return P.shape if P.shape is not None else Q.shape


def gauge(P: Body, x) -> float:
    """Minkowski functional of P at x."""
    return P.gauge(x)


def support(P: Body, u) -> float:
    """Support function of P at u."""
    return P.support(u)


def polar(P: Body) -> Body:
    return P.polar()


def linear_image(T, P: Body) -> Body:
    """T(P) for a FactorMap or an invertible matrix T."""
    if isinstance(T, FactorMap):
        if T.dim != P.dim:
            raise DimensionError("factor map and body dimensions differ")
    return P.linear_image(T)


def _same_body(P: Body, Q: Body) -> bool:
    return P is Q


def minkowski_combination(terms) -> Body:
    """sum_k c_k K_k for c_k >= 0, simplifying where possible."""
    terms = [(float(c), b) for c, b in terms if float(c) != 0.0]
    if not terms:
        raise PreconditionError("empty Minkowski combination")
    if any(c < 0 for c, _ in terms):
        raise PreconditionError("coefficients must be non-negative")
    # merge repeated summands: c K + c' K = (c + c') K
    merged: list[list] = []
    for c, b in terms:
        for m in merged:
            if _same_body(m[1], b) or _proportional_ellipsoids(m[1], b):
                m[0] += c * _ellipsoid_ratio(m[1], b)
                break
        else:
            merged.append([c, b])
    if len(merged) == 1:
        c, b = merged[0]
        return b if c == 1.0 else b.scaled(c)
    if all(b.is_polytope for _, b in merged):
        G = _minkowski_generators([b.scaled(c).vertices for c, b in merged])
        out = VPolytope(G, shape=merged[0][1].shape)
        return out
    return MinkowskiSum([(c, b) for c, b in merged])


def _proportional_ellipsoids(A: Body, B: Body) -> bool:
    if not (isinstance(A, Ellipsoid) and isinstance(B, Ellipsoid)):
        return False
    r = _ellipsoid_ratio(A, B)
    return np.allclose(A.M, B.M / r ** 2, rtol=0, atol=1e-15 * np.abs(A.M).max())


def _ellipsoid_ratio(A: Body, B: Body) -> float:
    # B = r A for proportional ellipsoids
    if A is B:
        return 1.0
    return float(np.sqrt(np.trace(A.M) / np.trace(B.M)))


def _minkowski_generators(gen_sets) -> np.ndarray:
    G = gen_sets[0]
    for H in gen_sets[1:]:
        signed = np.vstack([H, -H])
        G = (G[:, None, :] + signed[None, :, :]).reshape(-1, G.shape[1])
        G = pt.prune_generators(G)
    return G


def minkowski_sum(P: Body, Q: Body) -> Body:
    """P + Q; for polytopes the pruned pairwise sums of signed generators."""
    _check_same_dim(P, Q)
    out = minkowski_combination([(1.0, P), (1.0, Q)])
    return _tag(out, _common_shape(P, Q))


def _tag(B: Body, shape):
    if shape is not None and B.shape is None:
        return B.with_shape(shape)
    return B


def conv_union(P: Body, Q: Body) -> Body:
    """conv(P u Q)."""
    _check_same_dim(P, Q)
    if P.is_polytope and Q.is_polytope:
        out = VPolytope(np.vstack([P.vertices, Q.vertices]), shape=_common_shape(P, Q))
        return out
    return _tag(ConvexHullUnion([P, Q]), _common_shape(P, Q))


def intersect(P: Body, Q: Body) -> Body:
    """P n Q."""
    _check_same_dim(P, Q)
    if P.is_polytope and Q.is_polytope:
        return HPolytope(np.vstack([P.normals, Q.normals]), shape=_common_shape(P, Q))
    return _tag(Intersection([P, Q]), _common_shape(P, Q))


def convert_rep(P: Body, target: str, *, tol: float = 1e-6) -> Polytope:
    """Return an equivalent polytope whose primary representation is V or H.

    Ellipsoids are approximated: target "V" gives an inscribed polytope and
    target "H" a circumscribed one, each within relative Hausdorff error tol.
    """
    target = target.upper()
    if target not in ("V", "H"):
        raise ValueError("target must be 'V' or 'H'")
    if isinstance(P, Polytope):
        if target == "V":
            out = VPolytope(P.vertices, shape=P.shape, prune=False)
        else:
            out = HPolytope(P.normals, shape=P.shape, prune=False)
        out._V, out._A = P.vertices, P.normals
        return out
    if isinstance(P, Ellipsoid):
        return ellipsoid_polytope(P, target, tol)
    raise PreconditionError(f"cannot convert a {P.kind} body to a polytope")


def ellipsoid_polytope(E: Ellipsoid, target: str, tol: float) -> Polytope:
    """Inscribed (V) or circumscribed (H) polytope of an ellipsoid."""
    d = E.dim
    A = E.xi()
    if d == 2:
        # a regular 2n-gon inside the disk loses 1 - cos(pi / 2n)
        n = int(np.ceil(np.pi / (2.0 * np.arccos(1.0 / (1.0 + tol)))))
        th = np.linspace(0.0, np.pi, n, endpoint=False)
        D = np.column_stack([np.cos(th), np.sin(th)])
    else:
        # refine a random direction set until the covering radius is small enough
        rng = np.random.default_rng(0)
        D = direction_cloud(d, 200 * d, rng)
        for _ in range(60):
            poly = VPolytope(D, prune=False)
            worst = 1.0 / poly.inradius()
            if worst <= 1.0 + tol:
                break
            A_ = poly.normals
            far = A_ / np.linalg.norm(A_, axis=1, keepdims=True)
            D = np.vstack([D, far[np.argsort(-np.linalg.norm(A_, axis=1))[:len(far) // 4 + 1]]])
        else:
            raise NumericalError("ellipsoid approximation did not reach the tolerance")
    if target == "V":
        return VPolytope(D @ A.T, shape=E.shape)
    # circumscribed: tangent planes of the unit sphere; their polytope is the
    # polar of conv(+-D), whose circumradius is 1 / inradius(conv(+-D))
    return HPolytope(D @ np.linalg.inv(A), shape=E.shape)


def inscribed_polygon(B: Body, tol: float = 1e-6, anchors=None, max_vertices: int = 20000) -> VPolytope:
    """Polygon Q spanned by boundary points of a planar body B with B <= (1 + tol) Q.

    Edges are split at the support point of their outer normal until, in
    every edge cone, h_B(n) / <n, a> <= 1 + tol; in that cone B lies below
    the line <n, x> = h_B(n), so the ratio bounds the gauge of B over Q.
    ``anchors`` are extra boundary points to keep as vertices.
    """
    if B.dim != 2:
        raise DimensionError("inscribed_polygon takes planar bodies")
    th = np.linspace(0.0, np.pi, 64, endpoint=False)
    S = B.support_data(np.column_stack([np.cos(th), np.sin(th)]))[1]
    if anchors is not None:
        S = np.vstack([S, np.atleast_2d(anchors)])
    for _ in range(60):
        V = pt.unique_rows(np.vstack([S, -S]), 1e-13)
        V = V[np.argsort(np.arctan2(V[:, 1], V[:, 0]))]
        a, b = V, np.roll(V, -1, axis=0)
        n = np.column_stack([b[:, 1] - a[:, 1], a[:, 0] - b[:, 0]])
        n *= np.sign(np.einsum("nd,nd->n", n, a))[:, None]
        keep = np.linalg.norm(n, axis=1) > 0
        n = n[keep] / np.linalg.norm(n[keep], axis=1, keepdims=True)
        h, pts = B.support_data(n)
        ratio = h / np.einsum("nd,nd->n", n, a[keep])
        split = ratio > 1.0 + tol
        if not split.any():
            return VPolytope(S, shape=B.shape)
        S = np.vstack([S, pts[split]])
        if len(S) > max_vertices:
            break
    raise NumericalError(f"polygon approximation did not reach relative tolerance {tol}")


def provably_contained(P: Body, Q: Body) -> bool:
    """True when P <= Q follows from how the two bodies were built.

    Recognised: identical bodies, parts of hulls and intersections, and a
    pi-product inside an eps-product (or like inside like) of the same
    factor objects.  False means only that no such argument was found.
    """
    if P is Q:
        return True
    if isinstance(Q, Intersection):
        return all(provably_contained(P, q) for q in Q.parts)
    if isinstance(P, ConvexHullUnion):
        return all(provably_contained(p, Q) for p in P.parts)
    if isinstance(P, Intersection) and any(provably_contained(p, Q) for p in P.parts):
        return True
    if isinstance(Q, ConvexHullUnion) and any(provably_contained(P, q) for q in Q.parts):
        return True
    fp, fq = P.product_factors, Q.product_factors
    if fp is None or fq is None or P.shape != Q.shape or len(fp) != len(fq):
        return False
    if not all(a is b for a, b in zip(fp, fq)):
        return False
    return (P.product_kind, Q.product_kind) in (("pi", "pi"), ("pi", "eps"), ("eps", "eps"))


# ---------------------------------------------------------------------------
# containment factor
# ---------------------------------------------------------------------------

def nu(P: Body, Q: Body) -> float:
    """Smallest c >= 0 with P contained in cQ, i.e. sup over P of g_Q."""
    _check_same_dim(P, Q)
    if P.is_polytope:
        return float(Q.gauges(P.vertices).max())
    if Q.is_polytope:
        return float(P.supports(Q.normals).max())
    if isinstance(P, Ellipsoid) and isinstance(Q, Ellipsoid):
        from scipy.linalg import eigh
        w = eigh(Q.M, P.M, eigvals_only=True)
        return float(np.sqrt(w[-1]))
    if isinstance(P, ConvexHullUnion):
        return max(nu(part, Q) for part in P.parts)
    if isinstance(Q, Intersection):
        return max(nu(P, part) for part in Q.parts)
    if isinstance(P, Polar) and isinstance(Q, Polar):
        return nu(Q.base, P.base)
    rule = _product_rule(P, Q)
    if rule is not None:
        return rule
    form = _pp_form(P)
    if form is not None:
        base, T = form
        if T is None:
            return decomposable_sup(base.factors, base.shape, Q.gauges,
                                    lambda i, X: base.factors[i].gauges(X),
                                    joint=_joint_slice_gauges(base.factors, Q))
        return decomposable_sup(base.factors, base.shape, lambda X: Q.gauges(X @ T.T),
                                lambda i, X: base.factors[i].gauges(X))
    form = _polar_pp_form(Q)
    if form is not None:
        # P in cQ iff Q° in c P°, and Q° = T(base)
        base, T = form
        Qp = base if T is None else LinearImage(base, T)
        return nu(Qp, P.polar())
    return _nu_sphere(P, Q)


def _pp_form(X: Body):
    """(B, T) with X = T(B) for a projective product B, T None for the identity."""
    if isinstance(X, ProjectiveProduct):
        return X, None
    if isinstance(X, LinearImage):
        inner = _pp_form(X.base)
        if inner is not None:
            base, T = inner
            return base, X.T if T is None else X.T @ T
    if isinstance(X, Polar) and isinstance(X.base, Polar):
        return _pp_form(X.base.base)
    return None


def _polar_pp_form(X: Body):
    """(B, T) with X = (T(B))° for a projective product B."""
    if isinstance(X, Polar):
        return _pp_form(X.base)
    if isinstance(X, LinearImage):
        inner = _polar_pp_form(X.base)
        if inner is not None:
            # S (T B)° = (S^{-T} T B)°
            base, T = inner
            return base, X.Tinv.T if T is None else X.Tinv.T @ T
    return None


def _joint_slice_gauges(factors, Q: Body):
    """When every factor is a slice of Q, evaluate numerator and denominators in one batch."""
    if not all(isinstance(f, SliceBody) and f.base is Q for f in factors):
        return None

    def joint(pts, parts):
        sizes = [len(pts)] + [len(p) for p in parts]
        X = np.vstack([pts] + [p @ f.E.T for p, f in zip(parts, factors)])
        g = np.split(Q.gauges(X), np.cumsum(sizes)[:-1])
        den = [gi / f.scale for gi, f in zip(g[1:], factors)]
        return g[0], den

    return joint


def _product_rule(P: Body, Q: Body):
    """nu between a pi-product and an eps-product of the same shape factorises."""
    if P.product_kind == "pi" and Q.product_kind == "eps" and P.shape == Q.shape \
            and P.shape is not None:
        return float(np.prod([nu(a, b) for a, b in zip(P.product_factors, Q.product_factors)]))
    return None


def _nu_sphere(P: Body, Q: Body) -> float:
    """sup over P of g_Q by local search over the sphere.

    Three parametrisations are searched and the best value kept: the ratio
    of two oracles, g_Q at the support points of P, and h_P at the dual
    points of Q.  The last two only visit extreme points, which matters
    when the maximum sits on a ridge where the ratio is not smooth.
    """
    d = P.dim
    if Q.exact_gauge and P.exact_gauge:
        num, den = Q.gauges, P.gauges
    else:
        num, den = P.supports, Q.supports

    def ratio(X):
        return num(X) / den(X)

    def at_extreme(X):
        return Q.gauges(P.support_data(X)[1])

    def at_dual(X):
        return P.supports(Q.gauge_data(X)[1])

    objectives = [ratio]
    if P.exact_support:
        objectives.append(at_extreme)
    if Q.exact_gauge:
        objectives.append(at_dual)
    best = 0.0
    for k, obj in enumerate(objectives):
        rng = np.random.default_rng(5 + k)
        C = direction_cloud(d, max(400, 100 * d), rng)

        def f(owner, U, obj=obj):
            return obj(U.reshape(-1, d)).reshape(U.shape[:2])

        vals, _ = sphere_maximize(f, C[None], n_refine=8, tol=1e-11, rng=rng)
        best = max(best, float(vals[0]))
    return best


def decomposable_sup(factors, shape, num, den, *, fast=None, joint=None, n_refine: int = 6,
                     seed: int = 0) -> float:
    """sup over decomposable x_1 (x) ... (x) x_l of num(x) / prod_i den_i(x_i).

    Polytope factors are handled by enumerating their vertices; the remaining
    slots are searched over products of spheres.  ``fast`` is an optional
    cheaper numerator used during the search; the final value is always
    evaluated with ``num``.
    """
    dims = shape.dims
    search = fast if fast is not None else num
    poly = [i for i, f in enumerate(factors) if f.is_polytope]
    free = [i for i in range(len(dims)) if i not in poly]
    vert_sets = [factors[i].vertices for i in poly]
    if not free:
        pts = _assemble(dims, poly, vert_sets, free, None)
        return float(num(pts).max())
    blocks = [dims[i] for i in free]
    choices = list(iproduct(*[range(len(V)) for V in vert_sets])) if poly else [()]
    rng = np.random.default_rng(seed)
    planar = all(b == 2 for b in blocks) and len(blocks) <= 2
    best = -np.inf
    for choice in choices:
        fixed = [V[c] for V, c in zip(vert_sets, choice)]

        def ratio(flat, evaluator=num):
            pts = _assemble(dims, poly, fixed, free, flat)
            parts = np.split(flat, np.cumsum(blocks)[:-1], axis=1)
            d = np.ones(len(flat))
            if joint is not None and not poly:
                uniq = [np.unique(p, axis=0, return_inverse=True) for p in parts]
                n_val, dens = joint(pts, [u for u, _ in uniq])
                for (_, inv), dv in zip(uniq, dens):
                    d = d * dv[inv.ravel()]
                return n_val / d
            for k, i in enumerate(free):
                uniq, inv = np.unique(parts[k], axis=0, return_inverse=True)
                d = d * den(i, uniq)[inv.ravel()]
            return evaluator(pts) / d

        if planar:
            val = _angle_grid_max(ratio, len(blocks))
        else:
            search = fast if fast is not None else num
            n_start = 256 if sum(blocks) <= 4 else 512
            starts = normalize_blocks(rng.standard_normal((n_start, sum(blocks))), blocks)
            seeds = kron_free_product([direction_cloud(b, 8, rng) for b in blocks])
            starts = np.vstack([seeds, starts])

            def f(owner, U):
                flat = U.reshape(-1, U.shape[-1])
                return ratio(flat, search).reshape(U.shape[:2])

            _, argm = sphere_maximize(f, starts[None], blocks, n_refine=n_refine,
                                      tol=1e-10, rng=rng)
            val = ratio(argm[None])[0]
        best = max(best, val)
    return float(best)


def _angle_grid_max(ratio, k: int, n_grid: int = 32, n_keep: int = 3, rounds: int = 11) -> float:
    """Maximise ratio over k unit circles (k <= 2) by a grid and zoomed sub-grids.

    The ratio is even in each argument, so angles range over [0, pi).
    """
    def circle(th):
        return np.concatenate([np.stack([np.cos(th[:, i]), np.sin(th[:, i])], axis=1)
                               for i in range(k)], axis=1)

    step = np.pi / n_grid
    axes = [np.arange(n_grid) * step] * k
    TH = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
    offsets1 = np.linspace(-1.5, 1.5, 7)
    offsets = np.stack(np.meshgrid(*[offsets1] * k, indexing="ij"), axis=-1).reshape(-1, k)
    # locate the maximiser with coarse numerics, then evaluate it accurately
    with numeric_tolerance(GRID_TOL):
        vals = ratio(circle(TH))
    centers = TH[np.argsort(-vals)[:n_keep]]
    best, flat = -np.inf, 0
    with numeric_tolerance(COARSE_TOL):
        for _ in range(rounds):
            cand = (centers[:, None, :] + step * offsets[None]).reshape(-1, k)
            v = ratio(circle(cand)).reshape(len(centers), -1)
            j = np.argmax(v, axis=1)
            centers = cand.reshape(len(centers), -1, k)[np.arange(len(centers)), j]
            step /= 3.0
            # a smooth maximum stops improving long before the step runs out
            top = float(v.max())
            flat = flat + 1 if top <= best + 1e-13 * abs(best) else 0
            best = max(best, top)
            if flat >= 2:
                break
        cand = (centers[:, None, :] + step * offsets[None]).reshape(-1, k)
        v = ratio(circle(cand))
    # accurate values only at the best coarse candidates
    top = cand[np.argsort(-v)[:5]]
    return float(ratio(circle(top)).max())


def kron_free_product(grids):
    """All block-concatenations of one row from each grid."""
    out = grids[0]
    for g in grids[1:]:
        out = np.hstack([np.repeat(out, len(g), axis=0), np.tile(g, (len(out), 1))])
    return out


def _assemble(dims, poly, fixed, free, flat):
    """Flattened decomposables with fixed vectors in the polytope slots."""
    from .linalg import kron_rows
    n = 1 if flat is None else len(flat)
    parts = [None] * len(dims)
    for i, v in zip(poly, fixed):
        parts[i] = np.broadcast_to(np.asarray(v, dtype=float), (n, dims[i]))
    if flat is not None:
        blocks = np.split(flat, np.cumsum([dims[i] for i in free])[:-1], axis=1)
        for i, b in zip(free, blocks):
            parts[i] = b
    return kron_rows(parts)


# ---------------------------------------------------------------------------
# Hausdorff distance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HausdorffResult:
    value: float
    error: float
    exact: bool


def hausdorff(P: Body, Q: Body, *, with_error: bool = False):
    """Hausdorff distance; exact for polytope pairs."""
    _check_same_dim(P, Q)
    if P.is_polytope and Q.is_polytope:
        val = max(_directed_polytope(P, Q), _directed_polytope(Q, P))
        res = HausdorffResult(val, 0.0, True)
    else:
        a = _support_gap(P, Q, seed=1)
        b = _support_gap(P, Q, seed=2)
        res = HausdorffResult(max(a, b), abs(a - b) + 1e-10 * max(1.0, max(a, b)), False)
    return res if with_error else res.value


def _directed_polytope(P: Polytope, Q: Polytope) -> float:
    V = P.vertices
    g = Q.gauges(V)
    worst = 0.0
    for v, gv in zip(V, g):
        if gv <= 1.0:
            continue
        worst = max(worst, pt.distance_to_polytope(v, Q.vertices))
    return worst


def _support_gap(P: Body, Q: Body, seed: int) -> float:
    rng = np.random.default_rng(seed)
    C = direction_cloud(P.dim, max(600, 150 * P.dim), rng)

    def f(owner, U):
        flat = U.reshape(-1, P.dim)
        return np.abs(P.supports(flat) - Q.supports(flat)).reshape(U.shape[:2])

    vals, _ = sphere_maximize(f, C[None], n_refine=10, tol=1e-12, rng=rng)
    return float(vals[0])


def hausdorff_lower_bound(P: Body, Q: Body, n: int = 2000, seed: int = 0) -> float:
    """max over sampled unit directions of |h_P - h_Q|, a lower bound on the distance."""
    _check_same_dim(P, Q)
    rng = np.random.default_rng(seed)
    U = normalize_blocks(rng.standard_normal((n, P.dim)), None)
    return float(np.abs(P.supports(U) - Q.supports(U)).max())
