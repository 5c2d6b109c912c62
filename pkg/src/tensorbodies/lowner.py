"""Löwner (minimum-volume enclosing) ellipsoids of 0-symmetric bodies.

For a symmetric point set +-v_1, ..., +-v_n the centred problem is

    max log det X(u),   X(u) = sum_i u_i v_i v_i^T,   u >= 0, sum u = 1,

and the optimal ellipsoid is {x : x^T X(u)^{-1} x <= d}.  We use the
Frank-Wolfe iteration with away steps (Khachiyan's update plus the
Todd-Yildirim drop step), which converges linearly near the optimum.
The duality gap is max_i v_i^T X^{-1} v_i / d - 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bodies import Body, Ellipsoid, Polytope, ProjectiveProduct
from .errors import DimensionError, NumericalError
from .linalg import spd_inv
from .sphere import direction_cloud, sphere_maximize

DEFAULT_GAP = 1e-10
MAX_ITER = 100_000


@dataclass(frozen=True)
class MVEEResult:
    ellipsoid: Ellipsoid
    gap: float
    iterations: int
    weights: np.ndarray


def mvee(points: np.ndarray, *, gap: float = DEFAULT_GAP, max_iter: int = MAX_ITER) -> MVEEResult:
    """Minimum-volume 0-centred ellipsoid containing +-points.

    The returned ellipsoid is rescaled so that every point lies inside it,
    hence containment is exact and the volume is within (1 + gap)^(d/2)
    of optimal.
    """
    V = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = V.shape
    if np.linalg.matrix_rank(V) < d:
        raise DimensionError("the points do not span the space")
    u = np.full(n, 1.0 / n)
    cur_gap = np.inf
    it = 0
    Xi = w = None
    for it in range(1, max_iter + 1):
        if it % 256 == 1:
            # periodic refresh of the rank-one updated inverse
            try:
                Xi = np.linalg.inv((V.T * u) @ V)
            except np.linalg.LinAlgError as exc:
                raise NumericalError("singular moment matrix in the MVEE iteration") from exc
            w = np.einsum("ij,jk,ik->i", V, Xi, V)
        j = int(np.argmax(w))
        cur_gap = w[j] / d - 1.0
        if cur_gap <= gap:
            break
        act = np.nonzero(u > 0)[0]
        k = act[int(np.argmin(w[act]))]
        if w[j] / d - 1.0 >= 1.0 - w[k] / d:
            idx = j
            lam = (w[j] / d - 1.0) / (w[j] - 1.0)
        else:
            # away step: move weight off the least useful support point
            idx = k
            drop = -u[k] / (1.0 - u[k])
            lam = drop if w[k] <= 1.0 else max((w[k] / d - 1.0) / (w[k] - 1.0), drop)
        u *= 1.0 - lam
        u[idx] += lam
        if u[idx] < 1e-300:
            u[idx] = 0.0
        # X <- (1 - lam) X + lam v v^T, inverse by Sherman-Morrison
        a = lam / (1.0 - lam)
        z = Xi @ V[idx]
        c = a / (1.0 + a * w[idx])
        Vz = V @ z
        Xi = (Xi - c * np.outer(z, z)) / (1.0 - lam)
        w = (w - c * Vz * Vz) / (1.0 - lam)
    else:
        raise NumericalError(f"MVEE did not reach gap {gap} in {max_iter} iterations "
                             f"(gap {cur_gap:.3e})")
    w = np.einsum("ij,jk,ik->i", V, np.linalg.inv((V.T * u) @ V), V)
    cur_gap = max(cur_gap, w.max() / d - 1.0)
    X = (V.T * u) @ V
    M = spd_inv(X)
    M = 0.5 * (M + M.T)
    scale = np.einsum("ij,jk,ik->i", V, M, V).max()
    return MVEEResult(Ellipsoid(M / scale), float(max(cur_gap, 0.0)), it, u)


def lowner(P: Body, *, gap: float = DEFAULT_GAP, tol: float = 1e-9) -> Ellipsoid:
    """The Löwner ellipsoid of P (tagged with P's tensor shape)."""
    if isinstance(P, Ellipsoid):
        return P
    if P.is_polytope:
        E = mvee(P.vertices, gap=gap).ellipsoid
    elif isinstance(P, ProjectiveProduct) and all(isinstance(f, Ellipsoid) for f in P.factors):
        # the Löwner ellipsoid of a projective product of ellipsoids is their Hilbertian product
        from .products import hilbert_product
        E = hilbert_product(P.factors, P.shape)
    else:
        E = _lowner_oracle(P, gap, tol)
    return Ellipsoid(E.M, shape=P.shape)


def _lowner_oracle(P: Body, gap: float, tol: float, max_rounds: int = 60) -> Ellipsoid:
    """Column generation: MVEE of support points, adding the worst outside point."""
    d = P.dim
    rng = np.random.default_rng(17)
    U = direction_cloud(d, max(60, 30 * d), rng)
    pts = P.support_data(U)[1]
    for _ in range(max_rounds):
        E = mvee(pts, gap=gap).ellipsoid
        nu_val, x = _farthest_point(P, E, rng)
        if nu_val <= 1.0 + tol:
            return Ellipsoid(E.M / max(nu_val, 1.0) ** 2)
        pts = np.vstack([pts, x])
    raise NumericalError("Löwner ellipsoid column generation did not converge")


def _farthest_point(P: Body, E: Ellipsoid, rng) -> tuple[float, np.ndarray]:
    """sup over P of the gauge of E, with a maximising support point."""
    B = np.linalg.cholesky(E.M).T      # g_E(x) = |B x|
    d = P.dim
    C = direction_cloud(d, max(200, 60 * d), rng)

    def f(owner, W):
        return P.supports(W.reshape(-1, d) @ B).reshape(W.shape[:2])

    _, best = sphere_maximize(f, C[None], n_refine=4, tol=1e-10, rng=rng)
    h, x = P.support_data(best @ B)
    return float(E.gauges(x)[0]), x


def xi(E: Ellipsoid) -> np.ndarray:
    """The SPD matrix A with A(B_2) = E, i.e. M^{-1/2}."""
    return E.xi()


def normalize_lowner(P: Body) -> tuple[Body, np.ndarray]:
    """(A^{-1} P, A) with A = xi(lowner(P)), so the output is in Löwner position."""
    A = xi(lowner(P))
    return P.linear_image(np.linalg.inv(A)), A


def contact_points(P: Polytope, E: Ellipsoid, tol: float = 1e-4) -> np.ndarray:
    """Vertices of P on the boundary of E up to tol (one per antipodal pair)."""
    V = P.vertices
    return V[E.gauges(V) >= 1.0 - tol]


def in_lowner_position(P: Body, tol: float = 1e-4) -> bool:
    E = lowner(P)
    return bool(np.abs(E.M - np.eye(P.dim)).max() <= tol)
