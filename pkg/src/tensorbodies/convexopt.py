"""Batched ellipsoid method for small nonsmooth convex minimisations.

The numeric gauge and support routines reduce to problems of the form

    minimise f(a_b + N_b z) over z in R^n,   b = 1..B,

where f is convex, positively homogeneous and has an exact subgradient
oracle (a support function and its support points, or a gauge and its
dual points).  The ellipsoid method is slow but needs nothing beyond a
subgradient, is indifferent to kinks, and gives a certified lower bound,
which is what we use as the stopping rule.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

# oracle(P) -> (values (M,), subgradients (M, D)) for points P of shape (M, D)
Oracle = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def ellipsoid_minimize(oracle: Oracle, a: np.ndarray, N: np.ndarray, radius: np.ndarray, *,
                       rtol: float = 1e-12, max_iter: int | None = None
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimise f(a_b + N_b z) over the ball |z| <= radius_b for each b.

    ``a`` has shape (B, D), ``N`` shape (B, D, n) or (D, n) and ``radius``
    shape (B,).  Returns (best values, best points a + N z, lower bounds).
    """
    a = np.asarray(a, dtype=float)
    B, D = a.shape
    N = np.asarray(N, dtype=float)
    if N.ndim == 2:
        N = np.broadcast_to(N, (B,) + N.shape)
    n = N.shape[2]
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (B,)).copy()
    if n == 0:
        vals, _ = oracle(a)
        return vals, a.copy(), vals.copy()
    if n == 1:
        return _bisect_1d(oracle, a, N[:, :, 0], radius, rtol)
    if max_iter is None:
        max_iter = int(2 * n * (n + 1) * np.log(1e3 / rtol)) + 50
    z = np.zeros((B, n))
    P = np.eye(n)[None] * (radius ** 2)[:, None, None]
    best = np.full(B, np.inf)
    best_pt = a.copy()
    lower = np.full(B, -np.inf)
    active = np.ones(B, dtype=bool)
    c1 = 1.0 / (n + 1)
    c2 = n * n / (n * n - 1.0)
    for _ in range(max_iter):
        ia = np.nonzero(active)[0]
        if ia.size == 0:
            break
        pts = a[ia] + np.einsum("bdn,bn->bd", N[ia], z[ia])
        f, G = oracle(pts)
        g = np.einsum("bdn,bd->bn", N[ia], G)
        Pg = np.einsum("bij,bj->bi", P[ia], g)
        gPg = np.maximum(np.einsum("bi,bi->b", g, Pg), 0.0)
        s = np.sqrt(gPg)
        better = f < best[ia]
        best[ia[better]] = f[better]
        best_pt[ia[better]] = pts[better]
        lower[ia] = np.maximum(lower[ia], f - s)
        done = (best[ia] - lower[ia] <= rtol * np.abs(best[ia])) | (s <= 1e-300)
        active[ia[done]] = False
        keep = ~done
        ia, Pg, s = ia[keep], Pg[keep], s[keep]
        if ia.size == 0:
            break
        w = Pg / s[:, None]
        z[ia] -= c1 * w
        Pn = c2 * (P[ia] - 2.0 * c1 * w[:, :, None] * w[:, None, :])
        P[ia] = 0.5 * (Pn + np.transpose(Pn, (0, 2, 1)))
    return best, best_pt, lower


def _bisect_1d(oracle: Oracle, a, v, radius, rtol):
    """One-dimensional case: bisection on the sign of the directional derivative."""
    B = a.shape[0]
    lo = -radius.copy()
    hi = radius.copy()
    best = np.full(B, np.inf)
    best_pt = a.copy()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        pts = a + mid[:, None] * v
        f, G = oracle(pts)
        better = f < best
        best[better] = f[better]
        best_pt[better] = pts[better]
        slope = np.einsum("bd,bd->b", G, v)
        hi = np.where(slope > 0, mid, hi)
        lo = np.where(slope > 0, lo, mid)
        if np.all(hi - lo <= 1e-3 * rtol * np.maximum(radius, 1e-300)):
            break
    for t in (lo, hi):
        pts = a + t[:, None] * v
        f, _ = oracle(pts)
        better = f < best
        best[better] = f[better]
        best_pt[better] = pts[better]
    return best, best_pt, best.copy()


def complement_basis(X: np.ndarray) -> np.ndarray:
    """Orthonormal bases of the orthogonal complements of the rows of X.

    Returns an array of shape (B, D, D - 1) built from Householder reflections.
    """
    X = np.asarray(X, dtype=float)
    B, D = X.shape
    xh = X / np.linalg.norm(X, axis=1, keepdims=True)
    e = np.zeros(D)
    e[0] = 1.0
    v = xh - e
    sign_flip = np.linalg.norm(v, axis=1) < 1e-8
    v[sign_flip] = (xh + e)[sign_flip]
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    H = np.eye(D)[None] - 2.0 * v[:, :, None] * v[:, None, :]
    # H maps e1 to +-xhat, so its other columns span xhat's complement
    return H[:, :, 1:]
