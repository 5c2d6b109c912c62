"""Numerical upper bounds on classical and tensorial Banach-Mazur distances.

For a map T the two-sided containment factor

    lam(T) = nu(T P, R) * nu(R, T P)

is the smallest lam with R <= c T P <= lam R for a suitable scalar c, so
the distance is the infimum of lam over GL(d) (classical) or over the maps
(T_1 (x) ... (x) T_l) U_sigma (tensorial).  We run Nelder-Mead from several
starts on a sampled surrogate of lam, in which P and R are replaced by
finite sets of their boundary points, and re-score the best candidates with
exact containment factors.  The returned value is therefore always lam(T)
for an explicit T, hence an upper bound on the distance.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import polytope as pt
from .bodies import Body, ProjectiveProduct
from .convex import hausdorff, nu
from .errors import DimensionError, PreconditionError
from .linalg import FactorMap, TensorShape, random_factor_map, random_orthogonal
from .lowner import lowner
from .sphere import direction_cloud

MODES = ("classical", "tensorial")
N_POLISH = 2
N_CANDIDATES = 3


@dataclass
class BMResult:
    """Best value found, the map achieving it and some bookkeeping."""

    value: float
    map: FactorMap | np.ndarray
    mode: str
    converged: bool
    surrogate: float
    evaluations: int
    restarts: int
    history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# boundary samples
# ---------------------------------------------------------------------------

def boundary_samples(P: Body, count: int | None = None, seed: int = 0) -> np.ndarray:
    """Finitely many boundary points of P whose hull approximates P from inside.

    Polytopes give their vertices.  Projective products give the Kronecker
    products of factor samples, since those contain every extreme point.
    Other bodies give the support points of a direction cloud.
    """
    if P.is_polytope:
        return P.vertices
    d = P.dim
    if isinstance(P, ProjectiveProduct):
        per = max(12, int(round((count or 600) ** (1.0 / len(P.factors)))))
        parts = [boundary_samples(f, per, seed + i) for i, f in enumerate(P.factors)]
        out = parts[0]
        for part in parts[1:]:
            out = np.einsum("ai,bj->abij", out, part).reshape(-1, out.shape[1] * part.shape[1])
        return pt.unique_up_to_sign(out, 1e-12)
    if count is None:
        count = max(400, 100 * d)
    if d == 2:
        th = np.linspace(0.0, np.pi, count, endpoint=False)
        U = np.column_stack([np.cos(th), np.sin(th)])
    else:
        U = direction_cloud(d, count, np.random.default_rng(seed))
    S = P.support_data(U)[1]
    return S / P.gauges(S)[:, None]


# ---------------------------------------------------------------------------
# parametrisation
# ---------------------------------------------------------------------------

def _perm_matrix(shape: TensorShape, perm) -> np.ndarray:
    return FactorMap(tuple(np.eye(d) for d in shape.dims), perm, shape).matrix()


def _fast_gauges(P: Body):
    if P.is_polytope:
        A = P.normals
        return lambda X: np.abs(X @ A.T).max(axis=1)
    return P.gauges


class _Problem:
    """Surrogate objective for one permutation (or for dense maps)."""

    def __init__(self, SP, SR, P, R, shape: TensorShape | None, perm=None):
        self.SP, self.SR = SP, SR
        self.gP, self.gR = _fast_gauges(P), _fast_gauges(R)
        self.shape = shape
        self.perm = perm
        self.Pm = None if shape is None else _perm_matrix(shape, perm)
        self.evals = 0

    def matrix(self, theta: np.ndarray) -> np.ndarray:
        if self.shape is None:
            d = int(round(np.sqrt(theta.size)))
            return theta.reshape(d, d)
        mats, k = [], 0
        for d in self.shape.dims:
            mats.append(theta[k:k + d * d].reshape(d, d))
            k += d * d
        K = mats[0]
        for m in mats[1:]:
            a, b = K.shape[0], m.shape[0]
            K = np.einsum("ij,kl->ikjl", K, m).reshape(a * b, a * b)
        return K @ self.Pm

    def theta(self, T) -> np.ndarray:
        if self.shape is None:
            return np.asarray(T, dtype=float).ravel().copy()
        return np.concatenate([f.ravel() for f in T.factors])

    def factor_map(self, theta: np.ndarray) -> FactorMap:
        mats, k = [], 0
        for d in self.shape.dims:
            mats.append(theta[k:k + d * d].reshape(d, d))
            k += d * d
        return FactorMap(tuple(mats), self.perm, self.shape)

    def __call__(self, theta: np.ndarray) -> float:
        self.evals += 1
        M = self.matrix(theta)
        try:
            Minv = np.linalg.inv(M)
        except np.linalg.LinAlgError:
            return np.inf
        if not np.all(np.isfinite(Minv)):
            return np.inf
        a = self.gR(self.SP @ M.T).max()
        b = self.gP(self.SR @ Minv.T).max()
        val = float(np.log(a) + np.log(b))
        return val if np.isfinite(val) else np.inf


def _local_search(problem: _Problem, theta0: np.ndarray, max_fev: int, tol: float):
    theta = np.asarray(theta0, dtype=float)
    f = problem(theta)
    converged = False
    for _ in range(1 + N_POLISH):
        # restarting Nelder-Mead from its own output frees a collapsed simplex
        res = minimize(problem, theta, method="Nelder-Mead",
                       options={"maxfev": max_fev, "xatol": tol, "fatol": tol * 1e-3,
                                "adaptive": theta.size > 6})
        converged = bool(res.success)
        if res.fun < f - 1e-12:
            improved = f - res.fun
            theta, f = res.x, float(res.fun)
            if improved < tol * 1e-3:
                break
        else:
            break
    return theta, f, converged


def _run_start(args):
    problem, theta0, max_fev, tol = args
    theta, f, ok = _local_search(problem, theta0, max_fev, tol)
    return theta, f, ok, problem.evals


# ---------------------------------------------------------------------------
# starts
# ---------------------------------------------------------------------------

def _alignment(P: Body, R: Body, mode: str, shape: TensorShape | None):
    """Maps sending the Löwner ellipsoid of P (or its tensorial version) to that of R.

    Tensorial mode also returns the factor bodies of P and R.
    """
    if mode == "classical":
        return lowner(P).xi(), lowner(R).xi(), None, None
    from .calculus import extract_factors
    FP, FR = extract_factors(P), extract_factors(R)
    AP = FactorMap(tuple(lowner(f).xi() for f in FP), shape=shape)
    AR = FactorMap(tuple(lowner(f).xi() for f in FR), shape=shape)
    return AP, AR, FP, FR


def _planar_rotations(VP: np.ndarray, VR: np.ndarray) -> list[np.ndarray]:
    """Rotations and reflections sending the first point of VP onto the ray of a point of VR."""
    a = np.arctan2(VP[0, 1], VP[0, 0])
    out = []
    for w in np.vstack([VR, -VR]):
        b = np.arctan2(w[1], w[0])
        for s in (1.0, -1.0):
            # reflection across the axis at angle 0 composed with a rotation
            t = b - s * a
            c, n = np.cos(t), np.sin(t)
            out.append(np.array([[c, -n * s], [n, c * s]]))
    return out


def _vertex_candidates(FP, FR, AP: FactorMap, AR: FactorMap, perm, limit: int = 4096):
    """Orthogonal factor candidates matching vertices of Löwner-normalised planar factors.

    An exact image T P = R makes each normalised factor map orthogonal up to
    scale and sends vertices to vertices, so this finite set contains it.
    Output slot i of R is fed by input slot perm[i] of P.  Returns None
    when some factor is not a planar polytope.
    """
    per = []
    src = range(len(FP)) if perm is None else perm
    for i, j in enumerate(src):
        fP, fR, aP, aR = FP[j], FR[i], AP.factors[j], AR.factors[i]
        if fP.dim != 2 or fR.dim != 2 or not (fP.is_polytope and fR.is_polytope):
            return None
        VP = fP.vertices @ np.linalg.inv(aP).T
        VR = fR.vertices @ np.linalg.inv(aR).T
        per.append(_planar_rotations(VP, VR))
    if np.prod([len(c) for c in per], dtype=float) > limit:
        return None
    return list(itertools.product(*per))


def _starts(P, R, mode, shape, problems, perms, restarts, rng):
    """(perm index, start map) pairs: identity, Löwner alignment, then further starts.

    Further starts are vertex-matching alignments ranked by the surrogate
    when the factors are planar polytopes, and random rotations otherwise.
    """
    AP, AR, FP, FR = _alignment(P, R, mode, shape)
    out = []
    if mode == "classical":
        d = P.dim
        base = AR @ np.linalg.inv(AP)
        out.append((0, np.eye(d)))
        out.append((0, base))
        while len(out) < restarts:
            out.append((0, AR @ random_orthogonal(d, rng) @ np.linalg.inv(AP)))
        return out[:max(restarts, 1)]
    APi = AP.inverse()
    perm_maps = [FactorMap(tuple(np.eye(d) for d in shape.dims), perm, shape) for perm in perms]
    for k, U in enumerate(perm_maps):
        out.append((k, U))
        out.append((k, AR @ U @ APi))
    ranked = []
    for k, (perm, U) in enumerate(zip(perms, perm_maps)):
        for Qs in _vertex_candidates(FP, FR, AP, AR, perm) or ():
            T = AR @ FactorMap(tuple(Qs), shape=shape) @ U @ APi
            ranked.append((problems[k](problems[k].theta(T)), k, T))
    ranked.sort(key=lambda r: r[0])
    out.extend((k, T) for _, k, T in ranked[:max(restarts - len(out), 0)])
    k = 0
    while len(out) < restarts:
        V = random_factor_map(shape, rng, orthogonal=True, permute=False)
        out.append((k % len(perms), AR @ perm_maps[k % len(perms)] @ V @ APi))
        k += 1
    return out[:max(restarts, 1)]


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def containment_factor(P: Body, R: Body, T) -> float:
    """lam(T) = nu(T P, R) nu(R, T P) with exact containment factors."""
    TP = P.linear_image(T)
    return nu(TP, R) * nu(R, TP)


def bm_estimate(P: Body, R: Body, mode: str = "classical", restarts: int = 16, seed: int = 0, *,
                max_fev: int = 1000, tol: float = 1e-5, check: bool = True,
                jobs: int = 1) -> BMResult:
    """Upper bound on the (tensorial) Banach-Mazur distance between P and R.

    Tensorial mode enumerates the admissible permutations of the common
    tensor shape and optimises the factor matrices for each of them.
    ``check`` certifies both inputs as tensorial first.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if P.dim != R.dim:
        raise DimensionError("bodies of different dimensions")
    if restarts < 1:
        raise ValueError("at least one start is needed")
    shape = None
    perms = [None]
    if mode == "tensorial":
        if P.shape is None or R.shape is None or P.shape != R.shape:
            raise PreconditionError("tensorial mode needs two bodies with the same tensor shape")
        shape = P.shape
        if check:
            from .calculus import certify_tensorial
            for name, B in (("first", P), ("second", R)):
                cert = certify_tensorial(B)
                if not cert.accepted:
                    raise PreconditionError(f"the {name} body is not tensorial "
                                            f"(violation {cert.violation:.3e})")
        perms = shape.admissible_perms()
    rng = np.random.default_rng(seed)
    SP = boundary_samples(P, seed=seed)
    SR = boundary_samples(R, seed=seed + 1)
    problems = [_Problem(SP, SR, P, R, shape, perm) for perm in perms]
    starts = _starts(P, R, mode, shape, problems, perms, restarts, rng)
    tasks = [(problems[k], problems[k].theta(T), max_fev, tol) for k, T in starts]
    results = []
    chunk = max(jobs, 1)
    ex = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 and len(tasks) > 1 else None
    try:
        for i in range(0, len(tasks), chunk):
            part = tasks[i:i + chunk]
            results.extend(ex.map(_run_start, part) if ex else map(_run_start, part))
            # lam >= 1 always: a start within tol of 1 cannot be beaten by more than tol
            if min(r[1] for r in results) <= np.log1p(tol):
                break
    finally:
        if ex is not None:
            ex.shutdown()
    starts = starts[:len(results)]
    history = [float(np.exp(f)) for _, f, _, _ in results]
    evals = sum(r[3] for r in results) if ex is not None else sum(p.evals for p in problems)
    order = np.argsort([r[1] for r in results])
    # exact re-scoring of the best few candidates
    best = None
    for idx in order[:N_CANDIDATES]:
        theta, f, ok, _ = results[idx]
        prob = problems[starts[idx][0]]
        T = prob.factor_map(theta) if shape is not None else prob.matrix(theta).copy()
        try:
            val = containment_factor(P, R, T)
        except (np.linalg.LinAlgError, ArithmeticError):
            continue
        if best is None or val < best[0]:
            best = (val, T, ok, float(np.exp(f)))
    if best is None:
        T0 = starts[0][1]
        best = (containment_factor(P, R, T0), T0, False, np.inf)
    return BMResult(best[0], best[1], mode, best[2], best[3], evals, len(starts), history)


def orbit_invariance_check(P: Body, trials: int = 50, seed: int = 0) -> float:
    """max over random orthogonal factor maps U of the Hausdorff distance of U P and P."""
    if P.shape is None:
        raise PreconditionError("the body carries no tensor shape")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        U = random_factor_map(P.shape, rng, orthogonal=True, permute=True)
        worst = max(worst, hausdorff(P.linear_image(U), P))
    return worst
