"""The reproduction suite: eleven numbered checks and a JSON report.

Each check builds its own seeded inputs, measures the quantities it is
about, compares them with fixed tolerances and returns a CheckResult.
Checks share no state, so they can run in any order or in parallel and
the report is identical apart from the timing fields.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .bm import bm_estimate, orbit_invariance_check
from .bodies import Ellipsoid
from .calculus import (certify_tensorial, conv_tensor, crossnorm_error, ell_tensor,
                       eta_retract, homotopy_F, homotopy_G, homotopy_W, slice_normalize)
from .convex import hausdorff, hausdorff_lower_bound, minkowski_sum, nu
from .factories import lp_ball, random_polytope, random_tensorial
from .linalg import TensorShape, random_factor_map
from .lowner import lowner, mvee
from .products import euclidean_product, hilbert_product, injective_product, projective_product

SUITE_VERSION = "1.0.0"
DEFAULT_SEED = 20240601


@dataclass
class CheckResult:
    id: str
    anchor: str
    values: dict
    tolerance: dict
    passed: bool
    seconds: float = 0.0
    seed: int = 0
    notes: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.values.items())
        return f"[{status}] {self.id} {self.anchor}: {vals} ({self.seconds:.2f} s)"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.3e}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _f(x) -> float:
    return float(x)


# ---------------------------------------------------------------------------
# the checks; each returns (values, tolerance, passed)
# ---------------------------------------------------------------------------

S22 = TensorShape((2, 2))


def check_nonconvex_sum(seed: int):
    """A sum of two tensorial bodies whose factors differ in both slots is not tensorial."""
    t0 = time.perf_counter()
    B2, B1 = lp_ball(2, 2), lp_ball(1, 2)
    P = projective_product([B2.scaled(0.5), B2], S22)
    R = projective_product([B1.scaled(0.5), B1], S22)
    K = minkowski_sum(P, R)
    Kp = K.polar()
    x = np.random.default_rng(seed).standard_normal((100, 2))
    n2, ninf = np.linalg.norm(x, axis=1), np.abs(x).max(axis=1)
    a = np.array([1.0, 1.0])
    err_a = np.abs(Kp.gauges(np.array([np.kron(a, xi) for xi in x]))
                   - (np.sqrt(2.0) * n2 + ninf) / 2.0).max()
    b = np.array([1.0, 0.0])
    err_b = np.abs(Kp.gauges(np.array([np.kron(b, xi) for xi in x])) - (n2 + ninf) / 2.0).max()
    cert = certify_tensorial(K)
    secs = time.perf_counter() - t0
    values = {"formula_error_11": _f(err_a), "formula_error_10": _f(err_b),
              "accepted": bool(cert.accepted), "violation": _f(cert.violation), "seconds": secs}
    tol = {"formula_error": 1e-8, "violation_min": 1e-3, "seconds_max": 2.0}
    ok = err_a <= 1e-8 and err_b <= 1e-8 and not cert.accepted and cert.violation >= 1e-3 \
        and secs < 2.0
    return values, tol, ok


def _crossnorm_corpus(seed: int):
    plan = ([("2x2", "pi")] * 3 + [("2x2", "eps")] * 3 + [("2x2", "eta")] * 3
            + [("2x3", "pi")] * 3 + [("2x3", "eps")] * 2
            + [("2x2x2", "pi")] * 3 + [("2x2x2", "eps")] * 3)
    rng = np.random.default_rng(seed)
    for shape, kind in plan:
        yield shape, kind, random_tensorial(shape, kind, rng)


def check_crossnorm(seed: int):
    """The gauge of a tensorial body is multiplicative on decomposable tensors."""
    t0 = time.perf_counter()
    errs = []
    for k, (shape, kind, (P, factors)) in enumerate(_crossnorm_corpus(seed)):
        errs.append(crossnorm_error(P, factors, 200, seed + k))
    secs = time.perf_counter() - t0
    worst = max(errs)
    values = {"bodies": len(errs), "max_relative_error": _f(worst), "seconds": secs}
    tol = {"relative_error": 1e-6, "seconds_max": 30.0}
    return values, tol, bool(worst <= 1e-6 and secs < 30.0 and len(errs) == 20)


def check_lowner_factorisation(seed: int):
    """The Löwner ellipsoid of a projective product is the Hilbertian product of Löwners."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for shape in [(2, 2)] * 5 + [(2, 3)] * 5:
        S = TensorShape(shape)
        fs = [random_polytope(d, int(rng.integers(d + 1, d + 4)), rng) for d in shape]
        L = lowner(projective_product(fs, S))
        H = hilbert_product([lowner(f) for f in fs], S)
        worst = max(worst, hausdorff(L, H))
    cube = lp_ball("inf", 2)
    L = lowner(projective_product([cube, cube], S22))
    concrete = hausdorff(L, Ellipsoid.ball(4, 2.0))
    values = {"max_distance_random": _f(worst), "cube_product_distance": _f(concrete)}
    tol = {"random": 1e-4, "cube_product": 1e-5}
    return values, tol, bool(worst <= 1e-4 and concrete <= 1e-5)


def check_retractions(seed: int):
    """conv_tensor and eta are idempotent, conv_tensor is equivariant, eta fixes tensorial bodies."""
    rng = np.random.default_rng(seed)
    idem = 0.0
    fixed = 0.0
    tens = [random_tensorial(S22, kind, rng)[0] for kind in ("pi", "eps", "pi", "eps")]
    for P in tens:
        C = conv_tensor(P)
        idem = max(idem, hausdorff(conv_tensor(C), C))
        fixed = max(fixed, hausdorff(eta_retract(P), P))
    for _ in range(3):
        H = eta_retract(random_polytope(4, 8, rng, shape=S22))
        idem = max(idem, hausdorff(eta_retract(H), H))
    equi = 0.0
    P = tens[0]
    C = conv_tensor(P)
    for _ in range(10):
        T = random_factor_map(S22, rng, cond=3.0)
        equi = max(equi, hausdorff(conv_tensor(P.linear_image(T)), C.linear_image(T)))
    values = {"idempotence": _f(idem), "equivariance": _f(equi), "eta_fixes_tensorial": _f(fixed)}
    tol = {"idempotence": 1e-8, "equivariance": 1e-6, "eta_fixes_tensorial": 1e-8}
    return values, tol, bool(idem <= 1e-8 and equi <= 1e-6 and fixed <= 1e-8)


def check_scaling(seed: int):
    """Moving a scalar between the factors does not change any of the three products."""
    rng = np.random.default_rng(seed)
    P1, P2 = random_polytope(2, 4, rng), random_polytope(2, 3, rng)
    E1, E2 = (Ellipsoid(np.diag(rng.uniform(0.5, 2.0, 2))) for _ in range(2))
    worst = {"pi": 0.0, "eps": 0.0, "l2": 0.0}
    for lam in (0.25, 4.0):
        for kind, make, a, b in (("pi", projective_product, P1, P2),
                                 ("eps", injective_product, P1, P2),
                                 ("l2", hilbert_product, E1, E2)):
            d = hausdorff(make([a.scaled(lam), b.scaled(1.0 / lam)], S22), make([a, b], S22))
            worst[kind] = max(worst[kind], d)
    values = {k: _f(v) for k, v in worst.items()}
    return values, {"distance": 1e-10}, bool(max(worst.values()) <= 1e-10)


def check_sandwich(seed: int):
    """pi-products sit inside eps-products, which sit inside d_1 times the pi-products."""
    rng = np.random.default_rng(seed)
    pairs = [(random_polytope(2, int(rng.integers(3, 6)), rng),
              random_polytope(2, int(rng.integers(3, 6)), rng)) for _ in range(5)]
    B2 = lp_ball(2, 2)
    pairs += [(B2, B2), (B2, random_polytope(2, 4, rng)),
              (Ellipsoid(np.diag([4.0, 1.0])), lp_ball("inf", 2))]
    pe, ep = 0.0, 0.0
    for a, b in pairs:
        Pi, Eps = projective_product([a, b], S22), injective_product([a, b], S22)
        pe = max(pe, nu(Pi, Eps))
        ep = max(ep, nu(Eps, Pi))
    witness = nu(euclidean_product("eps", S22), euclidean_product("pi", S22))
    values = {"nu_pi_eps": _f(pe), "nu_eps_pi": _f(ep), "witness": _f(witness)}
    tol = {"nu_pi_eps_max": 1.0 + 1e-9, "nu_eps_pi_max": 2.0 + 1e-6, "witness": 1e-6}
    ok = pe <= 1.0 + 1e-9 and ep <= 2.0 + 1e-6 and abs(witness - 2.0) <= 1e-6
    return values, tol, bool(ok)


def check_slice(seed: int):
    """Slice normalisation lands on the Euclidean ball; homotopy endpoints are correct."""
    rng = np.random.default_rng(seed)
    corpus = [random_tensorial(S22, k, rng)[0] for k in ("pi", "eps", "eta", "pi")]
    corpus.append(random_tensorial("2x3", "pi", rng)[0])
    corpus.append(random_tensorial("2x3", "eps", rng)[0])
    ell = 0.0
    normalized = []
    for P in corpus:
        Q, _ = slice_normalize(P)
        normalized.append(Q)
        ell = max(ell, hausdorff(ell_tensor(Q), Ellipsoid.ball(Q.dim)))
    w0 = 0.0
    g1 = 0.0
    for Q in normalized[:3]:
        w0 = max(w0, hausdorff(homotopy_W(Q, 0.0), Q))
        target = euclidean_product("pi", Q.shape)
        g1 = max(g1, hausdorff(homotopy_G(Q, 1.0), target))
    Bpi = euclidean_product("pi", S22)
    ffix = max(hausdorff(homotopy_F(Bpi, t), Bpi) for t in (0.0, 0.3, 0.7, 1.0))
    values = {"lowner_to_ball": _f(ell), "W_at_0": _f(w0), "G_at_1": _f(g1), "F_fixes_ball": _f(ffix)}
    tol = {"lowner_to_ball": 1e-4, "endpoints": 1e-6}
    ok = ell <= 1e-4 and w0 <= 1e-6 and g1 <= 1e-6 and ffix <= 1e-6
    return values, tol, bool(ok)


def check_fixed_points(seed: int):
    """Three distinct bodies fixed by every orthogonal tensor map."""
    bodies = {"hilbert": euclidean_product("l2", S22), "pi": euclidean_product("pi", S22),
              "eps": euclidean_product("eps", S22)}
    inv = {k: _f(orbit_invariance_check(B, 50, seed)) for k, B in bodies.items()}
    names = list(bodies)
    pair = {f"{a}-{b}": _f(hausdorff(bodies[a], bodies[b]))
            for i, a in enumerate(names) for b in names[i + 1:]}
    values = {**{f"invariance_{k}": v for k, v in inv.items()}, **{f"dist_{k}": v for k, v in pair.items()}}
    tol = {"invariance": 1e-8, "pairwise_min": 0.1}
    ok = max(inv.values()) <= 1e-8 and min(pair.values()) >= 0.1
    return values, tol, bool(ok)


def check_banach_mazur(seed: int):
    """The estimator returns 1 on a body and its images, and at most 2 between pi and eps balls."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    P, _ = random_tensorial(S22, "pi", rng)
    self_val = bm_estimate(P, P, "tensorial", restarts=4, seed=seed).value
    image_vals = []
    for k in range(5):
        T = random_factor_map(S22, rng, cond=3.0)
        image_vals.append(bm_estimate(P, P.linear_image(T), "tensorial", restarts=32,
                                      seed=seed + k).value)
    pe = bm_estimate(euclidean_product("pi", S22), euclidean_product("eps", S22), "tensorial",
                     restarts=64, seed=seed).value
    secs = time.perf_counter() - t0
    values = {"self": _f(self_val), "images_max": _f(max(image_vals)), "pi_eps": _f(pe),
              "seconds": secs}
    tol = {"self_max": 1.0 + 1e-6, "images_max": 1.0 + 1e-3, "pi_eps_range": [1.5, 2.001],
           "seconds_max": 60.0}
    ok = self_val <= 1.0 + 1e-6 and max(image_vals) <= 1.0 + 1e-3 and 1.5 <= pe <= 2.001 \
        and secs < 60.0
    return values, tol, bool(ok)


def check_mvee(seed: int):
    """MVEE of the cube, the duality gap at termination and the speed on 1000 points."""
    rel = 0.0
    gap = 0.0
    for d in (2, 3, 4):
        res = mvee(lp_ball("inf", d).vertices)
        rel = max(rel, np.abs(res.ellipsoid.M * d - np.eye(d)).max())
        gap = max(gap, res.gap)
    X = np.random.default_rng(seed).standard_normal((1000, 6))
    t0 = time.perf_counter()
    res = mvee(X)
    secs = time.perf_counter() - t0
    gap = max(gap, res.gap)
    values = {"cube_relative_error": _f(rel), "max_gap": _f(gap), "seconds_1000x6": secs}
    tol = {"relative": 1e-6, "gap": 1e-7, "seconds_max": 1.0}
    return values, tol, bool(rel <= 1e-6 and gap <= 1e-7 and secs < 1.0)


def check_hausdorff(seed: int):
    """Exact polytope distances agree with sampled lower bounds; two known values."""
    rng = np.random.default_rng(seed)
    below = 0.0
    gap = 0.0
    within = True
    for k in range(20):
        d = 2 if k < 12 else 3
        P = random_polytope(d, int(rng.integers(d + 1, d + 5)), rng)
        Q = random_polytope(d, int(rng.integers(d + 1, d + 5)), rng)
        exact = hausdorff(P, Q)
        n = 4000 if d == 2 else 20000
        lower = hausdorff_lower_bound(P, Q, n=n, seed=seed + k)
        res = _sampling_resolution(P, Q, n, seed + k)
        below = max(below, lower - exact)
        gap = max(gap, exact - lower)
        within &= exact - lower <= res
    square = hausdorff(lp_ball(2, 2), lp_ball("inf", 2))
    double = hausdorff(lp_ball("inf", 2), lp_ball("inf", 2, radius=2.0))
    e1 = abs(square - (np.sqrt(2.0) - 1.0))
    e2 = abs(double - np.sqrt(2.0))
    values = {"lower_above_exact": _f(below), "max_exact_minus_lower": _f(gap),
              "within_resolution": bool(within), "ball_cube_error": _f(e1),
              "cube_double_error": _f(e2)}
    tol = {"lower_above_exact": 1e-9, "known_values": 1e-9}
    ok = below <= 1e-9 and within and e1 <= 1e-9 and e2 <= 1e-9
    return values, tol, bool(ok)


def _sampling_resolution(P, Q, n: int, seed: int) -> float:
    """An estimate of how far a sampled max can fall below the true max.

    |h_P - h_Q| is Lipschitz on the sphere with constant R_P + R_Q; the
    angular covering radius of the sample is estimated from 20000 probes
    and inflated by half.
    """
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, P.dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    probes = np.random.default_rng(seed + 10_000).standard_normal((20000, P.dim))
    probes /= np.linalg.norm(probes, axis=1, keepdims=True)
    chord = cKDTree(U).query(probes)[0].max()
    angle = float(2.0 * np.arcsin(min(chord / 2.0, 1.0)))
    return 1.5 * angle * (P.circumradius() + Q.circumradius())


# id -> (anchor, function)
CHECKS: dict[str, tuple[str, Callable]] = {
    "AC1": ("sum of tensorial bodies with different factors is not tensorial", check_nonconvex_sum),
    "AC2": ("crossnorm property of tensorial bodies", check_crossnorm),
    "AC3": ("Löwner ellipsoid of a projective product is a Hilbertian product",
            check_lowner_factorisation),
    "AC4": ("retractions onto projective products and tensorial bodies", check_retractions),
    "AC5": ("scalar invariance of projective, injective and Hilbertian products", check_scaling),
    "AC6": ("projective and injective products sandwich every reasonable crossnorm",
            check_sandwich),
    "AC7": ("Löwner slice and the homotopies W, F, G", check_slice),
    "AC8": ("bodies fixed by the orthogonal tensor group", check_fixed_points),
    "AC9": ("tensorial Banach-Mazur distance estimates", check_banach_mazur),
    "AC10": ("minimum-volume enclosing ellipsoid solver", check_mvee),
    "AC11": ("Hausdorff distance via support functions", check_hausdorff),
}


def run_check(check_id: str, seed: int = DEFAULT_SEED) -> CheckResult:
    anchor, fn = CHECKS[check_id]
    t0 = time.perf_counter()
    try:
        values, tol, ok = fn(seed)
        notes = ""
    except Exception as exc:  # a failing check is recorded, not fatal
        values, tol, ok = {}, {}, False
        notes = f"{type(exc).__name__}: {exc}"
    return CheckResult(check_id, anchor, values, tol, bool(ok), time.perf_counter() - t0, seed,
                       notes)


def _run_one(args):
    return run_check(*args)


def reproduce_suite(jobs: int = 1, seed: int = DEFAULT_SEED, only=None) -> dict:
    """Run the checks (all, or the ids in ``only``) and assemble the report."""
    ids = list(CHECKS) if not only else [i for i in CHECKS if i in set(only)]
    t0 = time.perf_counter()
    args = [(i, seed) for i in ids]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, args))
    else:
        results = [_run_one(a) for a in args]
    return {
        "suite_version": SUITE_VERSION,
        "seed": seed,
        "jobs": jobs,
        "all_passed": all(r.passed for r in results),
        "wall_clock_seconds": time.perf_counter() - t0,
        "checks": [asdict(r) for r in results],
    }


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")
