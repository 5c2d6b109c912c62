"""Low-level polytope routines: facet enumeration, pruning, LPs and projection.

A 0-symmetric polytope is stored either as generators G (the body is
conv(+-G)) or as normals A (the body is {x : |<a, x>| <= 1}).  The two are
exchanged by polarity, so a single routine that lists the facets of
conv(+-G) converts in both directions.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import ComplexityError, DimensionError, NumericalError

MAX_CONVERT_DIM = 10
MAX_FACETS = 100_000
PRUNE_TOL = 1e-9


def canonical_sign(X: np.ndarray) -> np.ndarray:
    """Flip rows so that their first significant entry is positive."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return X
    scale = np.abs(X).max(axis=1, keepdims=True)
    sig = np.abs(X) > 1e-9 * scale
    first = np.argmax(sig, axis=1)
    s = np.sign(X[np.arange(len(X)), first])
    s[s == 0] = 1.0
    return X * s[:, None]


def unique_rows(X: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Drop rows that coincide with an earlier row up to a relative tolerance."""
    X = np.asarray(X, dtype=float)
    if len(X) < 2:
        return X
    scale = max(np.abs(X).max(), 1e-300)
    pairs = cKDTree(X).query_pairs(rtol * scale, output_type="ndarray")
    if len(pairs) == 0:
        return X
    drop = np.zeros(len(X), dtype=bool)
    drop[np.maximum(pairs[:, 0], pairs[:, 1])] = True
    return X[~drop]


def unique_up_to_sign(X: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    return unique_rows(canonical_sign(X), rtol)


def _hull(points: np.ndarray) -> ConvexHull:
    d = points.shape[1]
    if d > MAX_CONVERT_DIM:
        raise ComplexityError(f"facet enumeration capped at dimension {MAX_CONVERT_DIM}, got {d}")
    if np.linalg.matrix_rank(points, tol=1e-10 * max(np.abs(points).max(), 1e-300)) < d:
        raise DimensionError("the symmetric hull is not full-dimensional")
    try:
        return ConvexHull(points, qhull_options="Qc Qx" if d > 4 else "Qc")
    except QhullError:
        pass
    # near-degenerate input: joggle; callers re-solve and validate the facets
    # from the original points, so only the combinatorics come from here
    try:
        return ConvexHull(points, qhull_options="QJ")
    except QhullError as exc:
        raise NumericalError(f"facet enumeration failed: {str(exc).splitlines()[0]}") from exc


def _row_violation(pts: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """max_x |<a, x>| over pts for each normal a, in memory-bounded chunks."""
    out = np.empty(len(normals))
    for i in range(0, len(normals), 4096):
        out[i:i + 4096] = np.abs(pts @ normals[i:i + 4096].T).max(axis=0)
    return out


def symmetric_facets(G: np.ndarray) -> np.ndarray:
    """Normals A with conv(+-G) = {x : |<a, x>| <= 1 for all rows a of A}."""
    G = np.asarray(G, dtype=float)
    d = G.shape[1]
    if d == 1:
        return np.array([[1.0 / np.abs(G).max()]])
    pts = np.vstack([G, -G])
    hull = _hull(pts)
    if len(hull.simplices) > 4 * MAX_FACETS:
        raise ComplexityError(f"{len(hull.simplices)} hull simplices exceed the facet cap")
    # each facet {x : <a, x> = 1} is solved from its own vertices, which is
    # more accurate than the Qhull equation; thin simplices from triangulated
    # degenerate facets fall back to the equation
    eq = hull.equations
    with np.errstate(divide="ignore", invalid="ignore"):
        normals = -eq[:, :d] / eq[:, d:]
        simp = pts[hull.simplices]
        ok = np.abs(np.linalg.det(simp)) > 1e-14 * np.abs(pts).max() ** d
        normals[ok] = np.linalg.solve(simp[ok], np.ones((int(ok.sum()), d, 1)))[..., 0]
        viol = _row_violation(pts, normals)
        bad = ~(viol <= 1.0 + 1e-8)
        if bad.any():
            normals[bad] = -eq[bad, :d] / eq[bad, d:]
            viol[bad] = _row_violation(pts, normals[bad])
    if len(normals) == 0 or not np.all(viol <= 1.0 + 1e-8):
        raise NumericalError("facet enumeration produced an invalid facet")
    A = unique_up_to_sign(normals, 1e-9)
    if len(A) > MAX_FACETS:
        raise ComplexityError(f"{len(A)} facets exceed the cap {MAX_FACETS}")
    return A


def prune_generators(G: np.ndarray) -> np.ndarray:
    """Keep one representative per antipodal pair of vertices of conv(+-G)."""
    G = np.asarray(G, dtype=float)
    G = G[np.linalg.norm(G, axis=1) > 0]
    d = G.shape[1]
    if d == 1:
        return G[[np.argmax(np.abs(G[:, 0]))]]
    G = unique_up_to_sign(G)
    if len(G) <= d:
        if np.linalg.matrix_rank(G) < d:
            raise DimensionError("the symmetric hull is not full-dimensional")
        return G
    if d > MAX_CONVERT_DIM:
        return prune_generators_lp(G)
    hull = _hull(np.vstack([G, -G]))
    idx = np.unique(hull.vertices % len(G))
    return G[idx]


def prune_generators_lp(G: np.ndarray, tol: float = PRUNE_TOL) -> np.ndarray:
    """LP-based pruning: drop generators with gauge <= 1 + tol w.r.t. the rest."""
    keep = list(range(len(G)))
    for i in range(len(G)):
        rest = [k for k in keep if k != i]
        if len(rest) < G.shape[1]:
            continue
        try:
            g = lp_gauge(G[rest], G[i])
        except NumericalError:
            continue
        if g <= 1.0 + tol:
            keep = rest
    return G[keep]


def lp_gauge(G: np.ndarray, x: np.ndarray, dual: bool = False):
    """Gauge of conv(+-G) at x: min sum(lam) with [G; -G]^T lam = x, lam >= 0.

    With ``dual`` the optimal dual vector w (a point of the polar with
    <x, w> equal to the gauge) is returned as well.
    """
    G = np.asarray(G, dtype=float)
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        return (0.0, np.zeros_like(x)) if dual else 0.0
    W = np.vstack([G, -G]).T
    res = linprog(np.ones(W.shape[1]), A_eq=W, b_eq=x, bounds=(0, None), method="highs-ds")
    if res.status == 2:
        return (np.inf, np.zeros_like(x)) if dual else np.inf
    if res.status != 0:
        raise NumericalError(f"gauge LP failed: {res.message}")
    if dual:
        return float(res.fun), np.asarray(res.eqlin.marginals, dtype=float)
    return float(res.fun)


def lp_support(A: np.ndarray, u: np.ndarray, point: bool = False):
    """Support of {x : |Ax| <= 1} at u: max <u, x> subject to -1 <= Ax <= 1."""
    A = np.asarray(A, dtype=float)
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        return (0.0, np.zeros_like(u)) if point else 0.0
    ones = np.ones(len(A))
    res = linprog(-u, A_ub=np.vstack([A, -A]), b_ub=np.concatenate([ones, ones]),
                  bounds=(None, None), method="highs-ds")
    if res.status == 3:
        return (np.inf, np.zeros_like(u)) if point else np.inf
    if res.status != 0:
        raise NumericalError(f"support LP failed: {res.message}")
    return (float(-res.fun), np.asarray(res.x, dtype=float)) if point else float(-res.fun)


def min_norm_point(W: np.ndarray, tol: float = 1e-12, max_iter: int = 1000) -> np.ndarray:
    """Point of minimum Euclidean norm in conv(rows of W), by Wolfe's algorithm."""
    W = np.asarray(W, dtype=float)
    scale = max(np.abs(W).max(), 1e-300)
    j = int(np.argmin(np.einsum("ij,ij->i", W, W)))
    S = [j]
    lam = np.array([1.0])
    x = W[j].copy()
    for _ in range(max_iter):
        # major cycle: add the most violated point
        scores = W @ x
        j = int(np.argmin(scores))
        if x @ x - scores[j] <= tol * scale * scale or j in S:
            return x
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            # minor cycle: affine minimiser over the corral, then line search
            Y = W[S]
            k = len(S)
            M = np.ones((k + 1, k + 1))
            M[0, 0] = 0.0
            M[1:, 1:] = Y @ Y.T
            rhs = np.zeros(k + 1)
            rhs[0] = 1.0
            sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
            alpha = sol[1:]
            if np.all(alpha > 1e-15):
                lam = alpha
                x = lam @ Y
                break
            neg = alpha <= 1e-15
            ratios = lam[neg] / (lam[neg] - alpha[neg])
            theta = min(1.0, float(np.min(ratios)))
            lam = theta * alpha + (1.0 - theta) * lam
            lam[lam <= 1e-15] = 0.0
            keep = lam > 0
            S = [s for s, kp in zip(S, keep) if kp]
            lam = lam[keep]
            lam /= lam.sum()
            x = lam @ W[S]
            if len(S) == 1:
                break
    raise NumericalError("minimum-norm point iteration did not converge")


def distance_to_polytope(y: np.ndarray, G: np.ndarray) -> float:
    """Euclidean distance from y to conv(+-G)."""
    W = np.vstack([G, -G]) - np.asarray(y, dtype=float)
    return float(np.linalg.norm(min_norm_point(W)))
