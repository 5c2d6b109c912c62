"""Batched derivative-free maximisation over (products of) unit spheres.

Many quantities in this package are suprema of a ratio of two norms over the
unit sphere: a gauge computed from a support function, a containment factor
between two bodies, the supremum over decomposable tensors.  The routine
below runs an adaptive random local search on many such problems at once so
that the objective can be evaluated in large vectorised batches.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

# f(owner, U) -> values; owner[n] says which problem row n of U belongs to,
# U has shape (n, K, D) and the result has shape (n, K).
BatchObjective = Callable[[np.ndarray, np.ndarray], np.ndarray]


def normalize_blocks(U: np.ndarray, blocks: Sequence[int] | None) -> np.ndarray:
    """Scale each block of the last axis to unit Euclidean norm."""
    if blocks is None:
        n = np.linalg.norm(U, axis=-1, keepdims=True)
        return U / np.where(n > 0, n, 1.0)
    parts = []
    start = 0
    for b in blocks:
        seg = U[..., start:start + b]
        n = np.linalg.norm(seg, axis=-1, keepdims=True)
        parts.append(seg / np.where(n > 0, n, 1.0))
        start += b
    return np.concatenate(parts, axis=-1)


def _tangent(Z: np.ndarray, X: np.ndarray, blocks: Sequence[int] | None) -> np.ndarray:
    if blocks is None:
        return Z - np.sum(Z * X, axis=-1, keepdims=True) * X
    parts = []
    start = 0
    for b in blocks:
        z = Z[..., start:start + b]
        x = X[..., start:start + b]
        parts.append(z - np.sum(z * x, axis=-1, keepdims=True) * x)
        start += b
    return np.concatenate(parts, axis=-1)


def direction_cloud(dim: int, count: int, rng: np.random.Generator,
                    blocks: Sequence[int] | None = None) -> np.ndarray:
    """Unit directions: coordinate axes, diagonals and random points."""
    fixed = []
    if blocks is None:
        eye = np.eye(dim)
        fixed.append(eye)
        if dim <= 6:
            signs = np.array(np.meshgrid(*[[1.0, -1.0]] * dim)).reshape(dim, -1).T
            fixed.append(signs[signs[:, 0] > 0])
    fixed_arr = np.vstack(fixed) if fixed else np.zeros((0, dim))
    extra = max(count - len(fixed_arr), 0)
    rand = rng.standard_normal((extra, dim))
    return normalize_blocks(np.vstack([fixed_arr, rand])[:max(count, len(fixed_arr))], blocks)


def sphere_maximize(f: BatchObjective, starts: np.ndarray, blocks: Sequence[int] | None = None, *,
                    n_refine: int = 1, samples: int | None = None, tol: float = 1e-11,
                    max_iter: int = 600, init_radius: float = 0.25,
                    rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Maximise B objectives over the unit sphere (or a product of spheres).

    ``starts`` has shape (B, S, D).  All starts are evaluated, the best
    ``n_refine`` of each problem are refined by an adaptive random local
    search, and the best value and point per problem are returned.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    starts = normalize_blocks(np.asarray(starts, dtype=float), blocks)
    B, S, D = starts.shape
    vals = f(np.arange(B), starts)
    n_refine = min(n_refine, S)
    order = np.argsort(-vals, axis=1)[:, :n_refine]
    owner = np.repeat(np.arange(B), n_refine)
    cur = starts[owner, order.ravel()]
    fcur = vals[owner, order.ravel()]
    radius = np.full(owner.size, init_radius)
    K = samples if samples is not None else max(8, min(2 * D, 24))
    active = np.isfinite(fcur)
    for _ in range(max_iter):
        ia = np.nonzero(active)[0]
        if ia.size == 0:
            break
        X = cur[ia][:, None, :]
        Z = _tangent(rng.standard_normal((ia.size, K, D)), X, blocks)
        Z /= np.linalg.norm(Z, axis=-1, keepdims=True) + 1e-300
        cand = normalize_blocks(X + radius[ia, None, None] * Z, blocks)
        fv = f(owner[ia], cand)
        j = np.argmax(fv, axis=1)
        fb = fv[np.arange(ia.size), j]
        improved = fb > fcur[ia]
        win = ia[improved]
        cur[win] = cand[improved, j[improved]]
        fcur[win] = fb[improved]
        radius[ia] = np.where(improved, np.minimum(2.0 * radius[ia], 1.0), 0.5 * radius[ia])
        active[ia] = radius[ia] > tol
    best_val = np.full(B, -np.inf)
    best_pt = np.zeros((B, D))
    for k in range(owner.size):
        b = owner[k]
        if fcur[k] > best_val[b]:
            best_val[b] = fcur[k]
            best_pt[b] = cur[k]
    return best_val, best_pt


def sphere_minimize(f: BatchObjective, starts: np.ndarray, blocks: Sequence[int] | None = None,
                    **kwargs) -> tuple[np.ndarray, np.ndarray]:
    vals, pts = sphere_maximize(lambda o, U: -f(o, U), starts, blocks, **kwargs)
    return -vals, pts
