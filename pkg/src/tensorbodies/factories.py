"""Standard bodies and seeded random bodies."""
from __future__ import annotations

import numpy as np

from .bodies import Body, Ellipsoid, HPolytope, VPolytope
from .errors import DimensionError
from .linalg import TensorShape


def _parse_p(p) -> float:
    if isinstance(p, str):
        key = p.strip().lower()
        if key in ("inf", "infinity", "oo"):
            return np.inf
        p = float(key)
    p = float(p)
    if p not in (1.0, 2.0, np.inf):
        raise ValueError(f"only p in {{1, 2, inf}} is supported, got {p}")
    return p


def lp_ball(p, dim: int, radius: float = 1.0, shape=None) -> Body:
    """The closed unit ball of l_p^dim scaled by radius, for p in {1, 2, inf}."""
    if dim < 1:
        raise DimensionError("dimension must be positive")
    p = _parse_p(p)
    shape = None if shape is None else TensorShape.parse(shape)
    if shape is not None and shape.total != dim:
        raise DimensionError(f"shape {shape} does not match dimension {dim}")
    if p == 2.0:
        return Ellipsoid.ball(dim, radius, shape=shape)
    if p == 1.0:
        return VPolytope(radius * np.eye(dim), shape=shape, prune=False)
    return HPolytope(np.eye(dim) / radius, shape=shape, prune=False)


def cube_vertices(dim: int) -> np.ndarray:
    """The vertices of [-1, 1]^dim, one per antipodal pair."""
    signs = np.array(np.meshgrid(*[[1.0, -1.0]] * dim, indexing="ij")).reshape(dim, -1).T
    return signs[signs[:, 0] > 0]


def random_generators(dim: int, gens: int, rng: np.random.Generator) -> np.ndarray:
    """gens points uniform on the sphere with radii uniform on [0.5, 1.5]."""
    G = rng.standard_normal((gens, dim))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    return G * rng.uniform(0.5, 1.5, size=(gens, 1))


def random_polytope(dim: int, gens: int, seed: int | np.random.Generator = 0, shape=None) -> VPolytope:
    """Symmetric hull of random generators.

    Draws are repeated (from the same stream) until the generators span
    the space, so small generator counts in high dimension still work.
    """
    if gens < dim:
        raise DimensionError(f"{gens} generators cannot span R^{dim}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    for _ in range(100):
        G = random_generators(dim, gens, rng)
        if np.linalg.matrix_rank(G) == dim:
            return VPolytope(G, shape=shape)
    raise DimensionError("could not draw spanning generators")  # pragma: no cover


TENSORIAL_KINDS = ("pi", "eps", "eta")


def random_tensorial(shape, kind: str, seed: int | np.random.Generator = 0):
    """A random tensorial body and the factors it is known to factor through.

    ``kind`` "pi" and "eps" take products of random polygons or polytopes;
    "eta" applies the retraction to a random polytope of the tensor space,
    in which case the factors are the slices of that polytope.
    """
    from .calculus import eta_retract, extract_factors
    from .products import tensor_product

    shape = TensorShape.parse(shape)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if kind in ("pi", "eps"):
        factors = [random_polytope(d, int(rng.integers(d + 1, d + 4)), rng) for d in shape.dims]
        return tensor_product(kind, factors, shape), factors
    if kind == "eta":
        P = random_polytope(shape.total, 2 * shape.total, rng, shape=shape)
        return eta_retract(P), extract_factors(P)
    raise ValueError(f"kind must be one of {TENSORIAL_KINDS}")
