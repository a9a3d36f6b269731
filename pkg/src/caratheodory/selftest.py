"""Property suites run by ``caratheodory selftest``.

Each check returns ``(name, passed, metric)``; a suite is a list of checks
driven by generators seeded from (seed, check index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import serialize as ser
from .helly import MonotoneSequence, helly_select, pass_to_limit
from .herglotz import evaluate as h_evaluate, kernel_integral_check, random_measure, recover, trig_moments
from .kernels import (SampleSet, cayley, certify_positive_kernel, gram_assemble, point_mass_counterexample,
                      random_sample_set, schur_gram)
from .operators import factorize, spectral_norm
from .realization import holdout_points, random_realization, realize
from .stieltjes import IncreasingOperatorFunction, brod_bound_check, integrate

SUITES = ("core", "stieltjes", "helly", "full")


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    metric: float


def _random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    G = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return G @ G.conj().T


def check_factorization(rng, trials=100):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 17))
        A = _random_psd(rng, n, int(rng.integers(1, n + 1)))
        F = factorize(A)
        e1 = np.linalg.norm(A - F.T.conj().T @ F.T) / max(1.0, np.linalg.norm(A))
        e2 = abs(spectral_norm(A) - spectral_norm(F.T) ** 2) / max(1.0, spectral_norm(A))
        worst = max(worst, e1, e2)
    return "factorization", worst <= 1e-10, worst


def check_brod_bound(rng, trials=200):
    worst = -np.inf
    for _ in range(trials):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 6))
        H = np.array([_random_psd(rng, n, int(rng.integers(1, n + 1))) for _ in range(m)])
        beta = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        alpha = np.abs(beta) * rng.uniform(0, 1, m) * np.exp(2j * np.pi * rng.uniform(size=m))
        r = brod_bound_check(alpha, beta, H)
        worst = max(worst, r.lhs - r.rhs)
    return "alpha_beta_bound", worst <= 1e-12, worst


def check_counterexample(rng, trials=20):
    phi = point_mass_counterexample()
    counts = [gram_assemble(phi, random_sample_set(rng, int(rng.integers(1, 8)))).n_negative for _ in range(trials)]
    return "counterexample_one_negative_square", all(c == 1 for c in counts), float(max(counts))


def check_realization_round_trip(rng, trials=20):
    worst = 0.0
    ok = True
    for _ in range(trials):
        n, d = int(rng.integers(1, 3)), int(rng.integers(1, 9))
        phi = random_realization(rng, n, d)
        pts = 0.7 * np.exp(2j * np.pi * (np.arange(9) + rng.uniform()) / 9)
        R = realize(phi, pts)
        h = holdout_points(pts)[:10]
        err = max(spectral_norm(a - b) / max(1.0, spectral_norm(b)) for a, b in zip(R(h), phi(h)))
        G = gram_assemble(R, SampleSet.from_points(h))
        ok &= R.isometry_defect <= 1e-8 and R.skew_defect <= 1e-10 and G.min_eigenvalue >= -1e-8
        worst = max(worst, err)
    return "realization_round_trip", ok and worst <= 1e-6, worst


def check_cayley(rng, trials=20):
    worst = 0.0
    ok = True
    z = 0.9 * np.exp(2j * np.pi * np.arange(32) / 32) * np.sqrt(np.linspace(0.05, 1, 32))
    for _ in range(trials):
        phi = random_realization(rng, int(rng.integers(1, 3)), int(rng.integers(1, 6)))
        s = cayley(phi(z)).values
        worst = max(worst, max(spectral_norm(x) for x in s))
        ok &= schur_gram(z, s).min_eigenvalue >= -1e-8
    return "cayley_contractive", ok and worst <= 1 + 1e-10, worst


def check_kernel_positive(rng, trials=10):
    family = [random_sample_set(rng, 6) for _ in range(trials)]
    rep = certify_positive_kernel(random_realization(rng, 2, 5), family)
    return "kernel_positive", rep.passed, rep.worst_relative


def check_stieltjes_linear(rng):
    M = IncreasingOperatorFunction(0.0, 2 * np.pi, lambda t: t[:, None, None] * np.eye(2), 2)
    S = integrate(lambda t: t, M, 1e-8)
    err = spectral_norm(S - 2 * np.pi ** 2 * np.eye(2))
    return "stieltjes_t_dt", err <= 1e-8, err


def check_stieltjes_jump(rng):
    th = float(rng.uniform(0.5, 6.0))
    M = IncreasingOperatorFunction(0.0, 2 * np.pi, lambda t: (t >= th).astype(float)[:, None, None] + 0j, 1)
    S = integrate(lambda t: np.exp(1j * t), M, 1e-8)
    err = abs(S[0, 0] - np.exp(1j * th))
    return "stieltjes_jump", err <= 1e-8, err


def two_limit_sequence(k=40, n=1):
    """t/(2 pi) I for even members, the unit staircase with its jump at pi
    for odd ones."""
    ramp = IncreasingOperatorFunction(0.0, 2 * np.pi, lambda t: (t / (2 * np.pi))[:, None, None] * np.eye(n), n)
    stair = IncreasingOperatorFunction(0.0, 2 * np.pi, lambda t: (t >= np.pi).astype(float)[:, None, None] * np.eye(n),
                                       n, jumps=(np.pi,))
    return MonotoneSequence(lambda j: stair if j % 2 else ramp, np.eye(n), budget=k)


def check_helly(rng):
    F = two_limit_sequence()
    sel = helly_select(F)
    v = pass_to_limit(lambda t: np.exp(1j * t), sel)
    oracle = -1.0 if sel.indices[0] % 2 else 0.0
    err = abs(v[0, 0] - oracle)
    ok = sel.residual <= 1e-7 * spectral_norm(F.bound) and err <= 2e-8
    return "helly_two_limits", ok, err


def check_kernel_integral(rng, trials=3):
    worst = 0.0
    for _ in range(trials):
        mu = random_measure(rng, int(rng.integers(1, 4)), int(rng.integers(1, 5)))
        pts = rng.uniform(0.1, 0.8, 5) * np.exp(2j * np.pi * rng.uniform(size=5))
        worst = max(worst, kernel_integral_check(mu, pts).max_deviation)
    return "kernel_integral_identity", worst <= 1e-7, worst


def check_herglotz_round_trip(rng, trials=2):
    worst = 0.0
    for _ in range(trials):
        mu = random_measure(rng, int(rng.integers(1, 4)), int(rng.integers(1, 5)))
        rec = recover(mu)
        dev = np.linalg.norm(trig_moments(rec, 8) - trig_moments(mu, 8), 2, axis=(1, 2))
        worst = max(worst, float(dev.max()))
    return "herglotz_round_trip", worst <= 1e-3, worst


def check_serialization(rng):
    R = random_realization(rng, 2, 4)
    mu = random_measure(rng, 2, 2, n_cells=16)
    ok = True
    for enc, dec, obj in ((ser.realization_to_json, ser.realization_from_json, R),
                          (ser.measure_to_json, ser.measure_from_json, mu)):
        a = ser.dumps(enc(obj))
        ok &= ser.dumps(enc(dec(ser.loads(a)))) == a
    z = np.array([0.3 + 0.1j])
    back = ser.measure_from_json(ser.loads(ser.dumps(ser.measure_to_json(mu))))
    ok &= bool(np.array_equal(h_evaluate(back, z), h_evaluate(mu, z)))
    return "serialization_byte_identical", ok, 0.0 if ok else 1.0


def check_eval_origin(rng):
    mu = random_measure(rng, 2, 2)
    err = spectral_norm(h_evaluate(mu, 0.0) - mu.D - mu.total)
    return "herglotz_eval_origin", err <= 1e-10, err


SUITE_CHECKS = {
    "core": (check_factorization, check_brod_bound, check_counterexample, check_kernel_positive,
             check_realization_round_trip, check_cayley),
    "stieltjes": (check_stieltjes_linear, check_stieltjes_jump, check_brod_bound),
    "helly": (check_helly,),
}
SUITE_CHECKS["full"] = tuple(dict.fromkeys(
    SUITE_CHECKS["core"] + SUITE_CHECKS["stieltjes"] + SUITE_CHECKS["helly"]
    + (check_eval_origin, check_kernel_integral, check_herglotz_round_trip, check_serialization)))


def run_suite(suite: str, seed: int = 0) -> list[CheckResult]:
    if suite not in SUITE_CHECKS:
        raise KeyError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    out = []
    for k, check in enumerate(SUITE_CHECKS[suite]):
        rng = np.random.default_rng([seed, k])
        name, passed, metric = check(rng)
        out.append(CheckResult(suite, name, bool(passed), float(metric)))
    return out
