"""Tensor flattening, Kronecker products, factor maps and SPD matrix functions.

The tensor space R^{d1} x ... x R^{dl} is identified with R^{d1*...*dl}
through the row-major rule: the multi-index (k1, ..., kl) goes to
sum_i k_i * prod_{j>i} d_j.  This is what ``np.kron`` and ``reshape`` with
C order do, so every module can move between flat vectors and tensors with
a plain ``reshape(dims)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from itertools import permutations
from typing import Sequence

import numpy as np

from .errors import DimensionError, NumericalError

MAX_TOTAL_DIM = 64


@dataclass(frozen=True)
class TensorShape:
    """Factor dimensions (d1, ..., dl) of a tensor space."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1:
            raise DimensionError("a tensor shape needs at least one factor")
        if any(d < 2 for d in dims):
            raise DimensionError(f"factor dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)
        if self.total > MAX_TOTAL_DIM:
            raise DimensionError(f"total dimension {self.total} exceeds {MAX_TOTAL_DIM}")

    @classmethod
    def parse(cls, spec: str | Sequence[int] | "TensorShape") -> "TensorShape":
        """Accept ``"2x3"``, ``[2, 3]`` or an existing shape."""
        if isinstance(spec, TensorShape):
            return spec
        if isinstance(spec, str):
            try:
                return cls(tuple(int(s) for s in spec.lower().split("x")))
            except ValueError as exc:
                raise DimensionError(f"bad shape string {spec!r}") from exc
        return cls(tuple(spec))

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    @property
    def order(self) -> int:
        return len(self.dims)

    def flat_index(self, multi_index: Sequence[int]) -> int:
        """Row-major linear index of a multi-index."""
        return int(np.ravel_multi_index(tuple(multi_index), self.dims))

    def admissible_perms(self) -> list[tuple[int, ...]]:
        """Slot permutations sigma with d_{sigma(i)} = d_i."""
        idx = range(self.order)
        return [p for p in permutations(idx) if all(self.dims[p[i]] == self.dims[i] for i in idx)]

    def __str__(self) -> str:
        return "x".join(str(d) for d in self.dims)


def kron_vec(xs: Sequence[np.ndarray], shape: TensorShape | None = None) -> np.ndarray:
    """Flattened decomposable tensor x1 (x) ... (x) xl."""
    xs = [np.asarray(x, dtype=float).ravel() for x in xs]
    if shape is not None:
        if len(xs) != shape.order or any(x.size != d for x, d in zip(xs, shape.dims)):
            raise DimensionError(
                f"factor sizes {[x.size for x in xs]} do not match shape {shape.dims}")
    return reduce(np.kron, xs)


def kron_rows(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Row-wise Kronecker products: out[n] = kron(blocks[0][n], ..., blocks[-1][n])."""
    out = np.asarray(blocks[0], dtype=float)
    for b in blocks[1:]:
        b = np.asarray(b, dtype=float)
        out = (out[:, :, None] * b[:, None, :]).reshape(out.shape[0], -1)
    return out


def kron_all(sets: Sequence[np.ndarray]) -> np.ndarray:
    """All Kronecker products of one row from each of the given arrays."""
    out = np.asarray(sets[0], dtype=float)
    for s in sets[1:]:
        s = np.asarray(s, dtype=float)
        out = (out[:, None, :, None] * s[None, :, None, :]).reshape(out.shape[0] * s.shape[0], -1)
    return out


def embed_slot(shape: TensorShape, slot: int, anchor: Sequence[np.ndarray] | None = None) -> np.ndarray:
    """Matrix E of size total x d_slot with E x = a1 (x) .. x (at slot) .. (x) al.

    The anchors default to the first basis vectors.
    """
    if anchor is None:
        anchor = [np.eye(d)[0] for d in shape.dims]
    d = shape.dims[slot]
    cols = []
    for k in range(d):
        parts = list(anchor)
        parts[slot] = np.eye(d)[k]
        cols.append(kron_vec(parts))
    return np.column_stack(cols)


def _apply_factors(tensors: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    # tensors has a leading batch axis; factor i acts on axis i + 1
    out = tensors
    for i, t in enumerate(factors):
        out = np.moveaxis(np.tensordot(t, out, axes=([1], [i + 1])), 0, i + 1)
    return out


@dataclass(frozen=True)
class FactorMap:
    """The linear map (T1 (x) ... (x) Tl) U_sigma on a tensor space.

    ``U_sigma`` sends x1 (x) ... (x) xl to x_{sigma(1)} (x) ... (x) x_{sigma(l)};
    ``perm[i]`` stores sigma(i) with 0-based slots.
    """

    factors: tuple[np.ndarray, ...]
    perm: tuple[int, ...] = ()
    shape: TensorShape = field(default=None)

    def __post_init__(self):
        factors = tuple(np.array(t, dtype=float) for t in self.factors)
        for t in factors:
            t.setflags(write=False)
        perm = tuple(self.perm) if self.perm else tuple(range(len(factors)))
        shape = self.shape if self.shape is not None else TensorShape(tuple(t.shape[0] for t in factors))
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "shape", shape)
        if len(factors) != shape.order:
            raise DimensionError("number of factors must match the tensor order")
        for t, d in zip(factors, shape.dims):
            if t.shape != (d, d):
                raise DimensionError(f"factor of shape {t.shape} does not act on R^{d}")
        if sorted(perm) != list(range(shape.order)):
            raise DimensionError(f"{perm} is not a permutation")
        if any(shape.dims[perm[i]] != shape.dims[i] for i in range(shape.order)):
            raise DimensionError(f"permutation {perm} is not admissible for shape {shape.dims}")
        for t in factors:
            s = np.linalg.svd(t, compute_uv=False)
            if s[-1] <= 1e-14 * max(s[0], 1e-300):
                raise NumericalError("singular factor matrix")

    @classmethod
    def identity(cls, shape: TensorShape) -> "FactorMap":
        return cls(tuple(np.eye(d) for d in shape.dims), shape=shape)

    @property
    def dim(self) -> int:
        return self.shape.total

    @property
    def is_orthogonal(self) -> bool:
        return all(np.allclose(t @ t.T, np.eye(t.shape[0]), atol=1e-10) for t in self.factors)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Image of a vector, or of each row of a 2-d array."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        if X.shape[1] != self.dim:
            raise DimensionError(f"vector of length {X.shape[1]} in a space of dim {self.dim}")
        T = X.reshape((X.shape[0],) + self.shape.dims)
        T = np.transpose(T, (0,) + tuple(p + 1 for p in self.perm))
        T = _apply_factors(T, self.factors)
        out = T.reshape(X.shape[0], self.dim)
        return out[0] if single else out

    __call__ = apply

    def matrix(self) -> np.ndarray:
        """The dense total x total matrix."""
        return self.apply(np.eye(self.dim)).T

    def compose(self, other: "FactorMap") -> "FactorMap":
        """self o other."""
        if other.shape != self.shape:
            raise DimensionError("factor maps act on different shapes")
        factors = tuple(self.factors[i] @ other.factors[self.perm[i]] for i in range(self.shape.order))
        perm = tuple(other.perm[self.perm[i]] for i in range(self.shape.order))
        return FactorMap(factors, perm, self.shape)

    def __matmul__(self, other: "FactorMap") -> "FactorMap":
        return self.compose(other)

    def inverse(self) -> "FactorMap":
        inv = np.argsort(self.perm)
        factors = tuple(np.linalg.inv(self.factors[inv[j]]) for j in range(self.shape.order))
        return FactorMap(factors, tuple(int(i) for i in inv), self.shape)

    def transpose(self) -> "FactorMap":
        inv = np.argsort(self.perm)
        factors = tuple(self.factors[inv[j]].T for j in range(self.shape.order))
        return FactorMap(factors, tuple(int(i) for i in inv), self.shape)

    def scaled(self, c: float) -> "FactorMap":
        factors = list(self.factors)
        factors[0] = c * factors[0]
        return FactorMap(tuple(factors), self.perm, self.shape)


def factor_map_apply(T: FactorMap, x: np.ndarray) -> np.ndarray:
    """Apply (T1 (x) ... (x) Tl) U_sigma to x."""
    return T.apply(x)


def _check_symmetric(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError("expected a square matrix")
    scale = max(np.abs(M).max(), 1e-300)
    if np.abs(M - M.T).max() > 1e-10 * scale:
        raise NumericalError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def spd_eigh(M: np.ndarray, tol: float = 1e-13) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of an SPD matrix, raising if it is not positive."""
    M = _check_symmetric(M)
    w, V = np.linalg.eigh(M)
    if w[0] <= tol * max(abs(w[-1]), 1e-300):
        raise NumericalError(f"matrix is not positive definite (min eigenvalue {w[0]:.3g})")
    return w, V


def spd_sqrt(M: np.ndarray) -> np.ndarray:
    """Symmetric positive square root."""
    w, V = spd_eigh(M)
    S = (V * np.sqrt(w)) @ V.T
    return 0.5 * (S + S.T)


def spd_inv_sqrt(M: np.ndarray) -> np.ndarray:
    """Inverse of the symmetric positive square root."""
    w, V = spd_eigh(M)
    S = (V / np.sqrt(w)) @ V.T
    return 0.5 * (S + S.T)


def spd_inv(M: np.ndarray) -> np.ndarray:
    w, V = spd_eigh(M)
    S = (V / w) @ V.T
    return 0.5 * (S + S.T)


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def random_factor_map(shape: TensorShape, rng: np.random.Generator, *, orthogonal: bool = False,
                      cond: float = 4.0, permute: bool = True) -> FactorMap:
    """Random element of GL_tensor (or O_tensor) with a random admissible permutation."""
    factors = []
    for d in shape.dims:
        U = random_orthogonal(d, rng)
        if orthogonal:
            factors.append(U)
        else:
            V = random_orthogonal(d, rng)
            s = np.exp(rng.uniform(0.0, np.log(cond), size=d))
            factors.append((U * s) @ V)
    perms = shape.admissible_perms() if permute else [tuple(range(shape.order))]
    perm = perms[rng.integers(len(perms))]
    return FactorMap(tuple(factors), perm, shape)
