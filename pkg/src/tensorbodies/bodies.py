"""0-symmetric convex bodies and their evaluation oracles.

Every body exposes a vectorised gauge ``gauges(X)`` and support ``supports(U)``
(rows of X and U are points and directions).  Polytopes and ellipsoids have
closed forms for both.  Structured bodies built from them (tensor products
with non-polytope factors, polars, Minkowski sums, hulls of unions,
intersections, linear images and slices) evaluate one of the two oracles
exactly and obtain the other through the duality

    1 / g_K(x) = min { h_K(u) : <x, u> = 1 },   1 / h_K(u) = min { g_K(x) : <u, x> = 1 },

a convex problem on a hyperplane, solved by the ellipsoid method with
subgradients.  Every oracle therefore comes in a second form,
``support_data`` / ``gauge_data``, which also returns a maximising point:
a support point of K for h_K and a point of the polar for g_K.
"""
from __future__ import annotations

import contextvars
import threading
from contextlib import contextmanager
from typing import Sequence

import numpy as np
from scipy.linalg import null_space

from . import polytope as pt
from .errors import DimensionError, NumericalError, PreconditionError
from .linalg import FactorMap, TensorShape, spd_eigh, spd_inv, spd_inv_sqrt
from .convexopt import complement_basis, ellipsoid_minimize
from .sphere import direction_cloud, sphere_maximize

NUMERIC_TOL = 1e-11
_RTOL = contextvars.ContextVar("numeric_rtol", default=NUMERIC_TOL)


@contextmanager
def numeric_tolerance(rtol: float):
    """Relative accuracy of numeric gauges and supports inside the block."""
    token = _RTOL.set(float(rtol))
    try:
        yield
    finally:
        _RTOL.reset(token)


def _as_rows(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    X2 = np.atleast_2d(X)
    if X2.ndim != 2:
        raise DimensionError(f"expected a vector or a matrix of row vectors, got {X.ndim} axes")
    if X2.shape[-1] != dim:
        raise DimensionError(f"expected vectors of length {dim}, got {X2.shape[-1]}")
    return X2


def _unit_rows(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows scaled to unit length (zero rows kept) and their norms."""
    m = np.abs(X).max(axis=1)
    Y = X / np.where(m > 0, m, 1.0)[:, None]
    s = np.linalg.norm(Y, axis=1)
    return Y / np.where(s > 0, s, 1.0)[:, None], s * m


def _matrix_of(T) -> np.ndarray:
    return T.matrix() if isinstance(T, FactorMap) else np.asarray(T, dtype=float)


class Body:
    """Base class.  Subclasses override at least one of the two oracles."""

    kind = "body"
    is_polytope = False
    exact_gauge = True
    exact_support = True

    def __init__(self, dim: int, shape: TensorShape | None = None):
        self.dim = int(dim)
        if shape is not None:
            shape = TensorShape.parse(shape)
            if shape.total != self.dim:
                raise DimensionError(f"shape {shape} does not match dimension {self.dim}")
        self.shape = shape
        self._lock = threading.Lock()
        self._cloud = None
        # factor data when the body was built as a tensor product
        self.product_kind: str | None = None
        self.product_factors: tuple["Body", ...] | None = None

    # -- scalar wrappers -------------------------------------------------
    def gauge(self, x) -> float:
        return float(self.gauges(_as_rows(x, self.dim))[0])

    def support(self, u) -> float:
        return float(self.supports(_as_rows(u, self.dim))[0])

    # -- oracles ----------------------------------------------------------
    def gauges(self, X: np.ndarray) -> np.ndarray:
        return self.gauge_data(X)[0]

    def supports(self, U: np.ndarray) -> np.ndarray:
        return self.support_data(U)[0]

    def gauge_data(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gauges and, per row, a point w of the polar with <x, w> = g(x)."""
        return self._numeric_gauge_data(_as_rows(X, self.dim))

    def support_data(self, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Supports and, per row, a point s of the body with <u, s> = h(u)."""
        return self._numeric_support_data(_as_rows(U, self.dim))

    # -- numeric duality -------------------------------------------------
    def _radii_estimate(self) -> tuple[float, float]:
        """Rough (inradius, circumradius) from a fixed direction cloud, cached."""
        with self._lock:
            cached = self._cloud
        if cached is None:
            rng = np.random.default_rng(12345)
            C = direction_cloud(self.dim, max(64, 24 * self.dim), rng)
            # use an oracle the class evaluates without going through the other
            native_support, native_gauge = self._native_oracles()
            if self.exact_support or native_support or not (self.exact_gauge or native_gauge):
                h = self.supports(C)
                radii = (float(h.min()), float(h.max()))
            else:
                g = self.gauges(C)
                radii = (float(1.0 / g.max()), float(1.0 / g.min()))
            with self._lock:
                self._cloud = radii
            cached = radii
        return cached

    def _native_oracles(self) -> tuple[bool, bool]:
        """Whether support_data and gauge_data avoid the numeric duality here."""
        return (type(self).support_data is not Body.support_data,
                type(self).gauge_data is not Body.gauge_data)

    def _hyperplane_min(self, X, oracle, bound, rtol):
        """min f(u) over <x, u> = 1 for each row x; f is the oracle's value."""
        out = np.zeros(len(X))
        pts = np.zeros_like(X)
        nz = np.linalg.norm(X, axis=1) > 0
        if not np.any(nz):
            return out, pts, nz
        Xn = X[nz]
        a = Xn / np.einsum("nd,nd->n", Xn, Xn)[:, None]
        N = complement_basis(Xn)
        f0 = oracle(a)[0]
        # |u| <= f(u) * bound <= f(a) * bound at the optimum; 1.5 covers the radius estimate
        radius = 1.5 * f0 * bound + np.linalg.norm(a, axis=1) + 1e-300
        for _ in range(4):
            val, arg, _ = ellipsoid_minimize(oracle, a, N, radius, rtol=rtol)
            dist = np.linalg.norm(arg - a, axis=1)
            if np.all(dist < 0.9 * radius):
                break
            radius = np.where(dist < 0.9 * radius, radius, 8.0 * radius)
        out[nz] = val
        pts[nz] = arg
        return out, pts, nz

    def _numeric_gauge_data(self, X, rtol: float | None = None):
        rtol = _RTOL.get() if rtol is None else rtol
        r, _ = self._radii_estimate()
        # solve on unit rows (homogeneity) so tiny or huge inputs stay in range
        X, s = _unit_rows(X)
        h, u, nz = self._hyperplane_min(X, self.support_data, 1.0 / max(r, 1e-300), rtol)
        g = np.zeros(len(X))
        W = np.zeros_like(X)
        g[nz] = s[nz] / h[nz]
        W[nz] = u[nz] / h[nz, None]
        return g, W

    def _numeric_support_data(self, U, rtol: float | None = None):
        rtol = _RTOL.get() if rtol is None else rtol
        _, R = self._radii_estimate()
        U, s = _unit_rows(U)
        g, x, nz = self._hyperplane_min(U, self.gauge_data, R, rtol)
        h = np.zeros(len(U))
        S = np.zeros_like(U)
        h[nz] = s[nz] / g[nz]
        S[nz] = x[nz] / g[nz, None]
        return h, S

    # -- geometry ---------------------------------------------------------
    def polar(self) -> "Body":
        return Polar(self)

    def linear_image(self, T) -> "Body":
        return LinearImage(self, T)

    def scaled(self, c: float) -> "Body":
        c = abs(float(c))
        if c == 0:
            raise PreconditionError("scaling by zero does not give a body")
        return LinearImage(self, c * np.eye(self.dim))

    def with_shape(self, shape) -> "Body":
        """A shallow copy tagged with a tensor shape."""
        import copy
        other = copy.copy(self)
        other._lock = threading.Lock()
        Body.__init__(other, self.dim, shape)
        other.product_kind = self.product_kind
        other.product_factors = self.product_factors
        other._cloud = self._cloud
        return other

    def circumradius(self) -> float:
        """max |x| over the body."""
        return float(_sphere_extreme(self, "support", maximize=True))

    def inradius(self) -> float:
        """min h(u) over unit u."""
        return float(_sphere_extreme(self, "support", maximize=False))

    def boundary_points(self, dirs: np.ndarray) -> np.ndarray:
        dirs = _as_rows(dirs, self.dim)
        return dirs / self.gauges(dirs)[:, None]

    def __repr__(self) -> str:
        tag = f", shape={self.shape}" if self.shape is not None else ""
        return f"{type(self).__name__}(dim={self.dim}{tag})"


def _sphere_extreme(body: Body, which: str, maximize: bool) -> float:
    rng = np.random.default_rng(3)
    C = direction_cloud(body.dim, max(200, 60 * body.dim), rng)
    oracle = body.supports if which == "support" else body.gauges
    sgn = 1.0 if maximize else -1.0

    def f(owner, U):
        return sgn * oracle(U.reshape(-1, body.dim)).reshape(U.shape[:2])

    vals, _ = sphere_maximize(f, C[None], n_refine=6, tol=1e-10, rng=rng)
    return sgn * vals[0]


# ---------------------------------------------------------------------------
# polytopes
# ---------------------------------------------------------------------------

class Polytope(Body):
    """A 0-symmetric polytope holding generators and/or facet normals."""

    is_polytope = True

    def __init__(self, dim, generators=None, normals=None, shape=None, primary="V"):
        super().__init__(dim, shape)
        self._V = None if generators is None else np.array(generators, dtype=float).reshape(-1, dim)
        self._A = None if normals is None else np.array(normals, dtype=float).reshape(-1, dim)
        for arr in (self._V, self._A):
            if arr is not None:
                arr.setflags(write=False)
        self.primary = primary
        self.kind = "vpoly" if primary == "V" else "hpoly"

    @property
    def has_vertices(self) -> bool:
        return self._V is not None

    @property
    def has_normals(self) -> bool:
        return self._A is not None

    @property
    def vertices(self) -> np.ndarray:
        """One representative per antipodal pair of vertices."""
        if self._V is None:
            with self._lock:
                if self._V is None:
                    V = pt.symmetric_facets(self._A)
                    V.setflags(write=False)
                    self._V = V
        return self._V

    @property
    def normals(self) -> np.ndarray:
        """One representative per antipodal pair of facet normals."""
        if self._A is None:
            with self._lock:
                if self._A is None:
                    A = pt.symmetric_facets(self._V)
                    A.setflags(write=False)
                    self._A = A
        return self._A

    generators = vertices

    def _try_normals(self):
        try:
            return self.normals
        except pt.ComplexityError:
            return None

    def _try_vertices(self):
        try:
            return self.vertices
        except pt.ComplexityError:
            return None

    def gauges(self, X):
        X = _as_rows(X, self.dim)
        A = self._try_normals()
        if A is not None:
            return _max_abs(X, A)
        return self.gauge_data(X)[0]

    def supports(self, U):
        U = _as_rows(U, self.dim)
        V = self._try_vertices()
        if V is not None:
            return _max_abs(U, V)
        return self.support_data(U)[0]

    def gauge_data(self, X):
        X = _as_rows(X, self.dim)
        A = self._try_normals()
        if A is None:
            out = [pt.lp_gauge(self._V, x, dual=True) for x in X]
            return np.array([o[0] for o in out]), np.array([o[1] for o in out]).reshape(X.shape)
        return _argmax_abs(X, A)

    def support_data(self, U):
        U = _as_rows(U, self.dim)
        V = self._try_vertices()
        if V is None:
            out = [pt.lp_support(self._A, u, point=True) for u in U]
            return np.array([o[0] for o in out]), np.array([o[1] for o in out]).reshape(U.shape)
        return _argmax_abs(U, V)

    def polar(self) -> "Polytope":
        if self.primary == "V":
            out = HPolytope(self._V, shape=self.shape, prune=False)
        else:
            out = VPolytope(self._A, shape=self.shape, prune=False)
        out._V, out._A = self._A, self._V
        if self.product_factors is not None:
            out.product_kind = {"pi": "eps", "eps": "pi", "tensorial": "tensorial"}[self.product_kind]
            out.product_factors = tuple(f.polar() for f in self.product_factors)
        return out

    def linear_image(self, T) -> "Polytope":
        M = _matrix_of(T)
        if M.shape != (self.dim, self.dim):
            raise DimensionError("map and body dimensions differ")
        Minv = np.linalg.inv(M)
        V = None if self._V is None else self._V @ M.T
        A = None if self._A is None else self._A @ Minv
        out = _polytope_like(self, V, A)
        if isinstance(T, FactorMap) and self.product_factors is not None:
            out.product_kind = self.product_kind
            out.product_factors = _map_factors(T, self.product_factors)
        return out

    def scaled(self, c: float) -> "Polytope":
        c = abs(float(c))
        if c == 0:
            raise PreconditionError("scaling by zero does not give a body")
        V = None if self._V is None else c * self._V
        A = None if self._A is None else self._A / c
        out = _polytope_like(self, V, A)
        if self.product_factors is not None:
            out.product_kind = self.product_kind
            out.product_factors = (self.product_factors[0].scaled(c),) + self.product_factors[1:]
        return out

    def circumradius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def inradius(self) -> float:
        return float(1.0 / np.linalg.norm(self.normals, axis=1).max())


_CHUNK_ENTRIES = 1 << 22


def _row_chunks(n: int, m: int):
    step = max(1, _CHUNK_ENTRIES // max(m, 1))
    return (slice(i, i + step) for i in range(0, n, step))


def _max_abs(X: np.ndarray, R: np.ndarray) -> np.ndarray:
    """max_r |<x, r>| over rows r of R, in memory-bounded chunks of X."""
    out = np.empty(len(X))
    for sl in _row_chunks(len(X), len(R)):
        out[sl] = np.abs(X[sl] @ R.T).max(axis=1)
    return out


def _argmax_abs(X: np.ndarray, R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """max_r |<x, r>| over rows r of R, with the signed maximising row."""
    val = np.empty(len(X))
    arg = np.empty_like(X)
    for sl in _row_chunks(len(X), len(R)):
        S = X[sl] @ R.T
        j = np.argmax(np.abs(S), axis=1)
        s = S[np.arange(len(S)), j]
        val[sl] = np.abs(s)
        arg[sl] = R[j] * np.where(s < 0, -1.0, 1.0)[:, None]
    return val, arg


def _polytope_like(src: Polytope, V, A) -> Polytope:
    cls = VPolytope if src.primary == "V" else HPolytope
    out = cls.__new__(cls)
    Polytope.__init__(out, src.dim, V, A, shape=src.shape, primary=src.primary)
    return out


def _map_factors(T: FactorMap, factors: Sequence[Body]) -> tuple[Body, ...]:
    return tuple(factors[T.perm[i]].linear_image(T.factors[i]) for i in range(len(factors)))


class VPolytope(Polytope):
    """conv(+-generators)."""

    def __init__(self, generators, shape=None, prune: bool = True):
        G = np.atleast_2d(np.asarray(generators, dtype=float))
        if prune:
            G = pt.prune_generators(G)
        elif np.linalg.matrix_rank(G) < G.shape[1]:
            raise DimensionError("generators do not span the space")
        super().__init__(G.shape[1], generators=G, shape=shape, primary="V")


class HPolytope(Polytope):
    """{x : |<a, x>| <= 1 for every normal a}."""

    def __init__(self, normals, shape=None, prune: bool = True):
        A = np.atleast_2d(np.asarray(normals, dtype=float))
        if prune:
            A = pt.prune_generators(A)
        elif np.linalg.matrix_rank(A) < A.shape[1]:
            raise DimensionError("normals do not span the space (unbounded set)")
        super().__init__(A.shape[1], normals=A, shape=shape, primary="H")


# ---------------------------------------------------------------------------
# ellipsoids
# ---------------------------------------------------------------------------

def _quad_data(X: np.ndarray, M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """sqrt(x^T M x) per row and the maximiser M x / sqrt(x^T M x), safe from under/overflow."""
    m = np.abs(X).max(axis=1)
    Y = X / np.where(m > 0, m, 1.0)[:, None]
    YM = Y @ M
    q = np.sqrt(np.maximum(np.einsum("nd,nd->n", YM, Y), 0.0))
    return q * m, YM / np.where(q > 0, q, 1.0)[:, None]


class Ellipsoid(Body):
    """{x : x^T M x <= 1} for a symmetric positive definite M."""

    kind = "ellipsoid"

    def __init__(self, shape_matrix, shape=None):
        M = np.atleast_2d(np.asarray(shape_matrix, dtype=float))
        spd_eigh(M)
        M = 0.5 * (M + M.T)
        super().__init__(M.shape[0], shape)
        M.setflags(write=False)
        self.M = M
        self._Minv = None
        self._xi = None
        self._xi_inv = None

    @classmethod
    def ball(cls, dim: int, radius: float = 1.0, shape=None) -> "Ellipsoid":
        return cls(np.eye(dim) / radius ** 2, shape=shape)

    @property
    def shape_matrix(self) -> np.ndarray:
        return self.M

    @property
    def Minv(self) -> np.ndarray:
        if self._Minv is None:
            self._Minv = spd_inv(self.M)
        return self._Minv

    def xi(self) -> np.ndarray:
        """The SPD matrix A with A(B2) equal to this ellipsoid."""
        if self._xi is None:
            self._xi = spd_inv_sqrt(self.M)
        return self._xi

    def xi_inv(self) -> np.ndarray:
        if self._xi_inv is None:
            self._xi_inv = np.linalg.inv(self.xi())
        return self._xi_inv

    def gauges(self, X):
        return _quad_data(_as_rows(X, self.dim), self.M)[0]

    def supports(self, U):
        return _quad_data(_as_rows(U, self.dim), self.Minv)[0]

    def gauge_data(self, X):
        return _quad_data(_as_rows(X, self.dim), self.M)

    def support_data(self, U):
        return _quad_data(_as_rows(U, self.dim), self.Minv)

    def polar(self) -> "Ellipsoid":
        return Ellipsoid(self.Minv, shape=self.shape)

    def linear_image(self, T) -> "Ellipsoid":
        Tinv = np.linalg.inv(_matrix_of(T))
        return Ellipsoid(Tinv.T @ self.M @ Tinv, shape=self.shape)

    def scaled(self, c: float) -> "Ellipsoid":
        c = abs(float(c))
        if c == 0:
            raise PreconditionError("scaling by zero does not give a body")
        return Ellipsoid(self.M / c ** 2, shape=self.shape)

    def circumradius(self) -> float:
        return float(1.0 / np.sqrt(np.linalg.eigvalsh(self.M)[0]))

    def inradius(self) -> float:
        return float(1.0 / np.sqrt(np.linalg.eigvalsh(self.M)[-1]))


# ---------------------------------------------------------------------------
# structured bodies
# ---------------------------------------------------------------------------

class ProjectiveProduct(Body):
    """Projective tensor product of bodies of which at least one is not a polytope.

    The support function is evaluated exactly by recursion over the factors:
    a polytope factor contributes a maximum over its vertices and a pair of
    ellipsoid factors a spectral norm.  For two ellipsoid factors the gauge
    is a nuclear norm.
    """

    kind = "pi"

    def __init__(self, factors: Sequence[Body], shape: TensorShape):
        shape = TensorShape.parse(shape)
        factors = tuple(factors)
        if len(factors) != shape.order or any(f.dim != d for f, d in zip(factors, shape.dims)):
            raise DimensionError("factor dimensions do not match the tensor shape")
        super().__init__(shape.total, shape)
        self.factors = factors
        self.product_kind = "pi"
        self.product_factors = factors
        self.exact_gauge = self._two_ellipsoids()
        self.exact_support = _support_recursion_exact(factors)

    def _two_ellipsoids(self) -> bool:
        return len(self.factors) == 2 and all(isinstance(f, Ellipsoid) for f in self.factors)

    def support_data(self, U):
        U = _as_rows(U, self.dim)
        return _product_support_data(self.factors, self.shape.dims, U)

    def supports(self, U):
        U = _as_rows(U, self.dim)
        if self._two_ellipsoids():
            return _two_ellipsoid_svd(self.factors, self.shape.dims, U, values_only=True)
        return self.support_data(U)[0]

    def gauge_data(self, X):
        X = _as_rows(X, self.dim)
        if not self._two_ellipsoids():
            return self._numeric_gauge_data(X)
        # nuclear norm of B1 X B2^T with B_i = A_i^{-1}; its gradient is B1^T P B2
        d1, d2 = self.shape.dims
        B1 = self.factors[0].xi_inv()
        B2 = self.factors[1].xi_inv()
        Y = B1 @ X.reshape(-1, d1, d2) @ B2.T
        nuc, Q = nuclear_norm(Y, with_grad=True)
        W = B1.T @ Q @ B2
        return nuc, W.reshape(len(X), -1)

    def gauges(self, X):
        X = _as_rows(X, self.dim)
        if self._two_ellipsoids():
            d1, d2 = self.shape.dims
            K = np.kron(self.factors[0].xi_inv(), self.factors[1].xi_inv())
            return nuclear_norm((X @ K.T).reshape(-1, d1, d2))
        return self.gauge_data(X)[0]

    def linear_image(self, T) -> Body:
        if isinstance(T, FactorMap):
            if T.shape != self.shape:
                raise DimensionError("factor map acts on a different shape")
            return ProjectiveProduct(_map_factors(T, self.factors), self.shape)
        return LinearImage(self, T)

    def scaled(self, c: float) -> Body:
        return ProjectiveProduct((self.factors[0].scaled(c),) + self.factors[1:], self.shape)


def _support_recursion_exact(factors) -> bool:
    rest = [f for f in factors if not f.is_polytope]
    if len(rest) <= 1:
        return all(f.exact_support for f in rest)
    return len(rest) == 2 and all(isinstance(f, Ellipsoid) for f in rest)


def top_singular(Y: np.ndarray, values_only: bool = False):
    """Largest singular value and singular vectors of each matrix in a stack."""
    N, m, n = Y.shape
    if values_only and (m, n) == (2, 2):
        a, b, c, d = Y[:, 0, 0], Y[:, 0, 1], Y[:, 1, 0], Y[:, 1, 1]
        return 0.5 * (np.hypot(a + d, b - c) + np.hypot(a - d, b + c))
    if min(m, n) != 2:
        if values_only:
            return np.linalg.svd(Y, compute_uv=False)[:, 0]
        P, s, Qt = np.linalg.svd(Y)
        return s[:, 0], P[:, :, 0], Qt[:, 0, :]
    # closed form through the 2 x 2 Gram matrix of the short side
    G = Y @ np.swapaxes(Y, 1, 2) if m == 2 else np.swapaxes(Y, 1, 2) @ Y
    a, b, c = G[:, 0, 0], G[:, 0, 1], G[:, 1, 1]
    lam = 0.5 * (a + c + np.hypot(a - c, 2.0 * b))
    if values_only:
        return np.sqrt(np.maximum(lam, 0.0))
    v1 = np.stack([b, lam - a], axis=1)
    v2 = np.stack([lam - c, b], axis=1)
    use2 = np.linalg.norm(v2, axis=1) > np.linalg.norm(v1, axis=1)
    v = np.where(use2[:, None], v2, v1)
    nv = np.linalg.norm(v, axis=1)
    degenerate = nv < 1e-300
    v[degenerate] = np.array([1.0, 0.0])
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    sig = np.sqrt(np.maximum(lam, 0.0))
    safe = np.where(sig > 0, sig, 1.0)[:, None]
    if m == 2:
        u = v
        w = np.einsum("nij,ni->nj", Y, u) / safe
    else:
        w = v
        u = np.einsum("nij,nj->ni", Y, w) / safe
    return sig, u, w


def nuclear_norm(Y: np.ndarray, with_grad: bool = False):
    """Sum of singular values of each matrix in a stack, optionally with U V^T."""
    N, m, n = Y.shape
    if (m, n) != (2, 2):
        if not with_grad:
            return np.linalg.svd(Y, compute_uv=False).sum(axis=-1)
        P, s, Qt = np.linalg.svd(Y)
        k = min(m, n)
        return s.sum(axis=-1), P[:, :, :k] @ Qt[:, :k, :]
    # 2 x 2: with s = sign(det Y), Y + s cof(Y) = (sigma_1 + sigma_2) U V^T
    a, b, c, d = Y[:, 0, 0], Y[:, 0, 1], Y[:, 1, 0], Y[:, 1, 1]
    nuc = np.maximum(np.hypot(a + d, b - c), np.hypot(a - d, b + c))
    if not with_grad:
        return nuc
    s = np.sign(a * d - b * c)
    cof = np.stack([np.stack([d, -c], axis=1), np.stack([-b, a], axis=1)], axis=1)
    Q = (Y + s[:, None, None] * cof) / np.where(nuc > 0, nuc, 1.0)[:, None, None]
    return nuc, Q


def _two_ellipsoid_svd(factors, dims, U, values_only=False):
    """Support of A1 B2 (x) A2 B2 at U: the spectral norm of A1^T U A2."""
    N = U.shape[0]
    A1, A2 = factors[0].xi(), factors[1].xi()
    # row-major vec(A1^T U A2) = vec(U) (A1 (x) A2)
    Y = (U @ np.kron(A1, A2)).reshape(N, dims[0], dims[1])
    if values_only:
        return top_singular(Y, values_only=True)
    sig, u, v = top_singular(Y)
    X = (u @ A1.T)[:, :, None] * (v @ A2.T)[:, None, :]
    return sig, X.reshape(N, -1)


def _insert_slot(v: np.ndarray, rest: np.ndarray, i: int, dims: Sequence[int]) -> np.ndarray:
    """Rows of v (x) rest with v placed in tensor slot i."""
    N = rest.shape[0]
    rest_dims = [d for k, d in enumerate(dims) if k != i]
    T = v[:, :, None] * rest.reshape(N, 1, -1)
    T = T.reshape((N, dims[i]) + tuple(rest_dims))
    return np.moveaxis(T, 1, i + 1).reshape(N, -1)


def _product_support_data(factors: Sequence[Body], dims: Sequence[int], U: np.ndarray):
    """Support values and support points of a projective product at rows of U."""
    N = U.shape[0]
    if len(factors) == 1:
        return factors[0].support_data(U)
    rest_of = lambda i: ([f for k, f in enumerate(factors) if k != i],
                         [d for k, d in enumerate(dims) if k != i])
    poly = [i for i, f in enumerate(factors) if f.is_polytope]
    if poly:
        i = min(poly, key=lambda k: len(factors[k].vertices))
        V = factors[i].vertices
        T = U.reshape((N,) + tuple(dims))
        C = np.moveaxis(np.tensordot(T, V, axes=([i + 1], [1])), -1, 1)
        rest, rest_dims = rest_of(i)
        vals, pts = _product_support_data(rest, rest_dims, C.reshape(N * len(V), -1))
        vals = vals.reshape(N, len(V))
        j = np.argmax(vals, axis=1)
        best = pts.reshape(N, len(V), -1)[np.arange(N), j]
        return vals[np.arange(N), j], _insert_slot(V[j], best, i, dims)
    if len(factors) == 2 and all(isinstance(f, Ellipsoid) for f in factors):
        return _two_ellipsoid_svd(factors, dims, U)
    # general case: maximise h_rest(U^T x) / g_first(x) over directions x
    first, rest, rest_dims = factors[0], list(factors[1:]), list(dims[1:])
    d0 = dims[0]
    T = U.reshape(N, d0, -1)

    # h_rest(U^T x) is convex in x, so its maximum over the first factor sits
    # at a support point; searching those avoids a numeric gauge
    via_support = not first.exact_gauge

    def f(owner, X):
        if via_support:
            X = first.support_data(X.reshape(-1, d0))[1].reshape(X.shape)
        C = np.einsum("nkd,ndr->nkr", X, T[owner])
        h = _product_support_data(rest, rest_dims, C.reshape(-1, C.shape[-1]))[0]
        if via_support:
            return h.reshape(X.shape[:2])
        return h.reshape(X.shape[:2]) / first.gauges(X.reshape(-1, d0)).reshape(X.shape[:2])

    rng = np.random.default_rng(11)
    if d0 == 2:
        th = np.linspace(0.0, np.pi, 90, endpoint=False)
        C0 = np.column_stack([np.cos(th), np.sin(th)])
    else:
        C0 = direction_cloud(d0, 200, rng)
    C0 = np.vstack([C0, -C0])
    _, xs = sphere_maximize(f, np.broadcast_to(C0, (N,) + C0.shape), n_refine=2,
                            tol=NUMERIC_TOL, rng=rng)
    xs = first.support_data(xs)[1] if via_support else xs / first.gauges(xs)[:, None]
    C = np.einsum("nd,ndr->nr", xs, T)
    vals, pts = _product_support_data(rest, rest_dims, C)
    return vals, _insert_slot(xs, pts, 0, dims)


class Polar(Body):
    """The polar of a body: gauge and support exchange roles."""

    kind = "polar"

    def __init__(self, base: Body):
        super().__init__(base.dim, base.shape)
        self.base = base
        self.exact_gauge = base.exact_support
        self.exact_support = base.exact_gauge
        if base.product_factors is not None:
            self.product_kind = {"pi": "eps", "eps": "pi", "tensorial": "tensorial"}[base.product_kind]
            self.product_factors = tuple(f.polar() for f in base.product_factors)

    def gauges(self, X):
        return self.base.supports(X)

    def supports(self, U):
        return self.base.gauges(U)

    def gauge_data(self, X):
        return self.base.support_data(X)

    def support_data(self, U):
        return self.base.gauge_data(U)

    def polar(self) -> Body:
        return self.base

    def linear_image(self, T) -> Body:
        if isinstance(T, FactorMap):
            return Polar(self.base.linear_image(T.inverse().transpose()))
        return Polar(self.base.linear_image(np.linalg.inv(_matrix_of(T)).T))

    def scaled(self, c: float) -> Body:
        return Polar(self.base.scaled(1.0 / abs(float(c))))

    def circumradius(self) -> float:
        return 1.0 / self.base.inradius()

    def inradius(self) -> float:
        return 1.0 / self.base.circumradius()


class MinkowskiSum(Body):
    """sum_k c_k K_k with positive coefficients; supports add."""

    kind = "sum"
    exact_gauge = False

    def __init__(self, terms: Sequence[tuple[float, Body]]):
        terms = tuple((float(c), b) for c, b in terms)
        if not terms or any(c <= 0 for c, _ in terms):
            raise PreconditionError("Minkowski combination needs positive coefficients")
        dim = terms[0][1].dim
        if any(b.dim != dim for _, b in terms):
            raise DimensionError("summands have different dimensions")
        super().__init__(dim, terms[0][1].shape)
        self.terms = terms
        self.exact_support = all(b.exact_support for _, b in terms)

    def supports(self, U):
        U = _as_rows(U, self.dim)
        return sum(c * b.supports(U) for c, b in self.terms)

    def support_data(self, U):
        U = _as_rows(U, self.dim)
        h = np.zeros(len(U))
        S = np.zeros_like(U)
        for c, b in self.terms:
            hb, Sb = b.support_data(U)
            h += c * hb
            S += c * Sb
        return h, S

    def linear_image(self, T) -> Body:
        return MinkowskiSum([(c, b.linear_image(T)) for c, b in self.terms])

    def scaled(self, c: float) -> Body:
        return MinkowskiSum([(abs(c) * k, b) for k, b in self.terms])


class ConvexHullUnion(Body):
    """conv(K_1 u ... u K_m); supports take the maximum."""

    kind = "hull"
    exact_gauge = False

    def __init__(self, parts: Sequence[Body]):
        parts = tuple(parts)
        super().__init__(parts[0].dim, parts[0].shape)
        if any(p.dim != self.dim for p in parts):
            raise DimensionError("parts have different dimensions")
        self.parts = parts
        self.exact_support = all(p.exact_support for p in parts)

    def supports(self, U):
        U = _as_rows(U, self.dim)
        return np.max([p.supports(U) for p in self.parts], axis=0)

    def support_data(self, U):
        U = _as_rows(U, self.dim)
        return _best_part([p.support_data(U) for p in self.parts])

    def linear_image(self, T) -> Body:
        return ConvexHullUnion([p.linear_image(T) for p in self.parts])

    def scaled(self, c: float) -> Body:
        return ConvexHullUnion([p.scaled(c) for p in self.parts])


def _best_part(data):
    vals = np.array([d[0] for d in data])
    j = np.argmax(vals, axis=0)
    idx = np.arange(vals.shape[1])
    pts = np.array([d[1] for d in data])
    return vals[j, idx], pts[j, idx]


class Intersection(Body):
    """K_1 n ... n K_m; gauges take the maximum."""

    kind = "meet"
    exact_support = False

    def __init__(self, parts: Sequence[Body]):
        parts = tuple(parts)
        super().__init__(parts[0].dim, parts[0].shape)
        if any(p.dim != self.dim for p in parts):
            raise DimensionError("parts have different dimensions")
        self.parts = parts
        self.exact_gauge = all(p.exact_gauge for p in parts)

    def gauges(self, X):
        X = _as_rows(X, self.dim)
        return np.max([p.gauges(X) for p in self.parts], axis=0)

    def gauge_data(self, X):
        X = _as_rows(X, self.dim)
        return _best_part([p.gauge_data(X) for p in self.parts])

    def polar(self) -> Body:
        return Polar(self)

    def linear_image(self, T) -> Body:
        return Intersection([p.linear_image(T) for p in self.parts])

    def scaled(self, c: float) -> Body:
        return Intersection([p.scaled(c) for p in self.parts])


class LinearImage(Body):
    """T(K) for an invertible dense matrix T."""

    kind = "image"

    def __init__(self, base: Body, T):
        M = _matrix_of(T)
        if M.shape != (base.dim, base.dim):
            raise DimensionError("map and body dimensions differ")
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= 1e-14 * s[0]:
            raise NumericalError("singular linear map")
        super().__init__(base.dim, base.shape)
        self.base = base
        self.T = M
        self.Tinv = np.linalg.inv(M)
        self.exact_gauge = base.exact_gauge
        self.exact_support = base.exact_support

    def gauges(self, X):
        X = _as_rows(X, self.dim)
        return self.base.gauges(X @ self.Tinv.T)

    def supports(self, U):
        U = _as_rows(U, self.dim)
        return self.base.supports(U @ self.T)

    def gauge_data(self, X):
        g, W = self.base.gauge_data(_as_rows(X, self.dim) @ self.Tinv.T)
        return g, W @ self.Tinv

    def support_data(self, U):
        h, S = self.base.support_data(_as_rows(U, self.dim) @ self.T)
        return h, S @ self.T.T

    def linear_image(self, T) -> Body:
        return LinearImage(self.base, _matrix_of(T) @ self.T)

    def scaled(self, c: float) -> Body:
        return LinearImage(self.base, abs(c) * self.T)


class SliceBody(Body):
    """{x : E x / c in K} for an injective embedding matrix E (D x k)."""

    kind = "slice"
    exact_support = False

    def __init__(self, base: Body, E: np.ndarray, scale: float = 1.0):
        E = np.asarray(E, dtype=float)
        if E.shape[0] != base.dim:
            raise DimensionError("embedding does not land in the body's space")
        super().__init__(E.shape[1])
        self.base = base
        self.E = E
        self.scale = float(scale)
        self.exact_gauge = base.exact_gauge
        self._null = None
        self._pinv = None

    def _native_oracles(self):
        return self.base.exact_support, True

    def gauges(self, X):
        X = _as_rows(X, self.dim)
        return self.base.gauges(X @ self.E.T) / self.scale

    def gauge_data(self, X):
        X = _as_rows(X, self.dim)
        g, W = self.base.gauge_data(X @ self.E.T)
        return g / self.scale, (W @ self.E) / self.scale

    def support_data(self, U):
        U = _as_rows(U, self.dim)
        if not self.base.exact_support:
            return self._numeric_support_data(U)
        # the support of a section is an infimal projection of the base support:
        # h_S(u) = c min { h_K(w) : E^T w = u }
        if self._null is None:
            self._pinv = np.linalg.pinv(self.E)
            self._null = null_space(self.E.T)
        W0 = U @ self._pinv
        h0 = self.base.supports(W0)
        r, _ = self.base._radii_estimate()
        radius = 4.0 * h0 / max(r, 1e-300) + 1e-300
        val, w, _ = ellipsoid_minimize(self.base.support_data, W0, self._null, radius,
                                       rtol=_RTOL.get())
        # a support point of K at w lies (up to tolerance) in the range of E
        S = self.base.support_data(w)[1] @ self._pinv.T
        return self.scale * val, self.scale * S
