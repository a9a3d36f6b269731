"""Acceptance criteria, one test each, checked at their stated tolerances.

Every test records a PASS/FAIL line (see the ``criterion`` fixture) and a
wall-clock budget.  Expected values come from ``oracles`` or closed forms,
never from the code under test.
"""

import json
import time

import numpy as np
import pytest

from caratheodory import serialize as ser
from caratheodory.cli import main
from caratheodory.helly import pass_to_limit, helly_select
from caratheodory.herglotz import kernel_integral_check, random_measure, recover
from caratheodory.kernels import (SampleSet, cayley, gram_assemble, point_mass_counterexample, random_sample_set,
                                  schur_gram)
from caratheodory.operators import factorize
from caratheodory.realization import holdout_points, random_realization, realize
from caratheodory.selftest import run_suite, two_limit_sequence
from caratheodory.stieltjes import IncreasingOperatorFunction, brod_bound_check, integrate, rs_sum

from oracles import TWO_PI_SQ, cquad

TWO_PI = 2 * np.pi


def psd(rng, n, rank):
    G = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return G @ G.conj().T


def spec2(A):
    return float(np.linalg.norm(A, 2))


def test_factorization_suite(criterion):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_f = worst_2 = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 17))
        A = psd(rng, n, int(rng.integers(1, n + 1))) * 10.0 ** rng.uniform(-3, 3)
        T = factorize(A).T
        worst_f = max(worst_f, np.linalg.norm(A - T.conj().T @ T) / max(1.0, np.linalg.norm(A)))
        worst_2 = max(worst_2, abs(spec2(A) - spec2(T) ** 2) / max(1.0, spec2(A)))
    dt = time.perf_counter() - t0
    ok = worst_f <= 1e-10 and worst_2 <= 1e-10 and dt < 5
    criterion(1, ok, f"factorization frob {worst_f:.2e} norm {worst_2:.2e} (tol 1e-10), {dt:.2f}s < 5s")
    assert ok


def test_alpha_beta_bound_suite(criterion):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = -np.inf
    for _ in range(200):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 6))
        H = np.array([psd(rng, n, int(rng.integers(1, n + 1))) for _ in range(m)])
        beta = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        alpha = np.abs(beta) * rng.uniform(0, 1, m) * np.exp(1j * rng.uniform(0, TWO_PI, m))
        r = brod_bound_check(alpha, beta, H)
        # oracle: both sides recomputed by dense linear algebra
        lhs = spec2(np.einsum("i,ijk->jk", alpha, H))
        rhs = spec2(np.einsum("i,ijk->jk", np.abs(beta), H))
        assert r.lhs == pytest.approx(lhs, rel=1e-12, abs=1e-12)
        worst = max(worst, lhs - rhs, r.lhs - r.rhs)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 5
    criterion(2, ok, f"max(lhs - rhs) {worst:.2e} (slack 1e-12), {dt:.2f}s < 5s")
    assert ok


def test_stieltjes_linear(criterion):
    t0 = time.perf_counter()
    eps = 1e-8
    M = IncreasingOperatorFunction(0.0, TWO_PI, lambda t: t[:, None, None] * np.eye(2), 2)
    S, info = integrate(lambda t: t, M, eps, full_output=True)
    oracle = cquad(lambda t: t, 0.0, TWO_PI)
    finer = rs_sum(lambda t: t, M, info.partition.refine()).value
    dt = time.perf_counter() - t0
    err = spec2(S - oracle * np.eye(2))
    move = spec2(finer - S)
    ok = err <= eps and move <= eps and abs(oracle - TWO_PI_SQ) <= 1e-12 and dt < 10
    criterion(3, ok, f"|S - 2 pi^2 I| {err:.2e}, refinement moves {move:.2e} (eps 1e-8), {dt:.2f}s < 10s")
    assert ok


def test_helly_two_limits(criterion):
    t0 = time.perf_counter()
    eps = 1e-8
    F = two_limit_sequence()
    sel = helly_select(F)
    v = pass_to_limit(lambda t: np.exp(1j * t), sel, eps=eps)
    parity = {int(i) % 2 for i in sel.indices}
    # scalar oracle: int e^{it} d(t / 2 pi) = 0, int e^{it} d(step at pi) = -1
    oracle = cquad(lambda t: np.exp(1j * t) / TWO_PI, 0.0, TWO_PI) if parity == {0} else np.exp(1j * np.pi)
    err = abs(v[0, 0] - oracle)
    dt = time.perf_counter() - t0
    ok = len(parity) == 1 and sel.residual <= 1e-7 * spec2(F.bound) and err <= 2 * eps and dt < 30
    criterion(4, ok, f"residual {sel.residual:.2e} (tol 1e-7), |limit - oracle| {err:.2e} (tol 2e-8), "
                     f"{len(sel.indices)} members, {dt:.2f}s < 30s")
    assert ok


def test_realization_round_trip(criterion):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    worst = iso = skew = 0.0
    min_eig = np.inf
    for _ in range(20):
        n, d = int(rng.integers(1, 3)), int(rng.integers(1, 9))
        phi = random_realization(rng, n, d)
        assert np.allclose(phi.V.conj().T @ phi.V, np.eye(d), atol=1e-12)
        pts = 0.7 * np.exp(1j * (TWO_PI * np.arange(9) / 9 + rng.uniform(0, TWO_PI)))  # 9 + origin = 10 samples
        R = realize(phi, pts)
        held = holdout_points(pts, copies=2)[:10]
        err = max(spec2(a - b) / max(1.0, spec2(b)) for a, b in zip(R(held), phi(held)))
        worst = max(worst, err)
        iso, skew = max(iso, R.isometry_defect), max(skew, R.skew_defect)
        min_eig = min(min_eig, gram_assemble(R, SampleSet.from_points(np.r_[pts, held])).min_eigenvalue)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and iso <= 1e-8 and skew <= 1e-10 and min_eig >= -1e-8 and dt < 60
    criterion(5, ok, f"holdout rel err {worst:.2e} (1e-6), isometry {iso:.2e} (1e-8), skew {skew:.2e} (1e-10), "
                     f"gram min eig {min_eig:.2e} (-1e-8), {dt:.2f}s < 60s")
    assert ok


def exact_moments(mu, k_max):
    """Moments int e^{-ikt} dM by closed forms per atom and per constant cell."""
    k = np.arange(k_max + 1)
    out = np.einsum("ka,aij->kij", np.exp(-1j * np.outer(k, mu.atom_t)), mu.atom_mass)
    a, b = mu.cell_t0, mu.cell_t1
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (np.exp(-1j * np.outer(k, b)) - np.exp(-1j * np.outer(k, a))) / (-1j * k[:, None])
    w[0] = b - a
    return out + np.einsum("kc,cij->kij", w, mu.density)


@pytest.mark.parametrize("case", [(1, 1, 11), (2, 3, 12), (3, 4, 13), (3, 2, 14)])
def test_herglotz_round_trip(criterion, case):
    n, atoms, seed = case
    mu = random_measure(np.random.default_rng(seed), n, n_atoms=atoms)
    t0 = time.perf_counter()
    rec, info = recover(mu, full_output=True)
    dt = time.perf_counter() - t0
    dev = float(np.linalg.norm(exact_moments(rec, 8) - exact_moments(mu, 8), 2, axis=(1, 2)).max())
    ok = dev <= 1e-3 and dt < 120 and info.radii[-1] == 1 - 2.0 ** -12
    criterion(6, ok, f"n={n} atoms={atoms}: moment deviation {dev:.2e} (1e-3), "
                     f"radius {info.radii[-1]:.6f}, {dt:.2f}s < 120s")
    assert ok


def test_counterexample_signature(criterion, tmp_path):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    phi = point_mass_counterexample()
    counts = []
    for _ in range(20):
        S = random_sample_set(rng, int(rng.integers(1, 8)))
        assert S.include_origin and len(S) >= 2
        counts.append(gram_assemble(phi, S).n_negative)
    samples = tmp_path / "ce.json"
    samples.write_text(ser.dumps(ser.samples_to_json(SampleSet.from_points([0.5, -0.3j]).with_values(phi))))
    report = tmp_path / "r.json"
    code = main(["realize", str(samples), "--report", str(report)])
    dt = time.perf_counter() - t0
    outcome = json.loads(report.read_text())["outcome"]
    ok = set(counts) == {1} and code == 1 and outcome == "FAIL" and dt < 1
    criterion(7, ok, f"n_negative over 20 sets {sorted(set(counts))}, realize {outcome} (exit {code}), "
                     f"{dt:.2f}s < 1s")
    assert ok


def test_cayley_sanity(criterion):
    rng = np.random.default_rng(8)
    t0 = time.perf_counter()
    z = 0.95 * np.sqrt(np.linspace(0.0, 1.0, 32)) * np.exp(1j * TWO_PI * np.arange(32) * 0.381966)
    worst_norm, min_eig = 0.0, np.inf
    for k in range(20):
        if k % 2:
            src = random_measure(rng, int(rng.integers(1, 4)), n_atoms=2, n_cells=16)
        else:
            src = random_realization(rng, int(rng.integers(1, 3)), int(rng.integers(1, 7)))
        s = cayley(src(z)).values
        worst_norm = max(worst_norm, max(spec2(x) for x in s))
        min_eig = min(min_eig, schur_gram(z, s).min_eigenvalue)
    dt = time.perf_counter() - t0
    ok = worst_norm <= 1 + 1e-10 and min_eig >= -1e-8 and dt < 10
    criterion(8, ok, f"max |s| {worst_norm:.12f} (1 + 1e-10), schur gram min eig {min_eig:.2e} (-1e-8), "
                     f"{dt:.2f}s < 10s")
    assert ok


def test_kernel_integral_identity(criterion):
    rng = np.random.default_rng(9)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10):
        mu = random_measure(rng, int(rng.integers(1, 4)), n_atoms=int(rng.integers(0, 4)), n_cells=32)
        pts = rng.uniform(0.0, 0.85, 5) * np.exp(1j * rng.uniform(0, TWO_PI, 5))
        rep = kernel_integral_check(mu, pts)
        worst = max(worst, rep.max_deviation)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-7 and dt < 30
    criterion(9, ok, f"max deviation {worst:.2e} (tol 1e-7) over 10 measures x 25 pairs, {dt:.2f}s < 30s")
    assert ok


def test_determinism_and_selftest(criterion, tmp_path):
    rng = np.random.default_rng(10)
    same = True
    for enc, dec, obj in ((ser.realization_to_json, ser.realization_from_json, random_realization(rng, 2, 5)),
                          (ser.measure_to_json, ser.measure_from_json, random_measure(rng, 2, 3))):
        path = tmp_path / "x.json"
        path.write_text(ser.dumps(enc(obj)))
        first = path.read_bytes()
        path.write_text(ser.dumps(enc(dec(json.loads(first)))))
        same &= path.read_bytes() == first
    t0 = time.perf_counter()
    report = tmp_path / "selftest.json"
    code = main(["selftest", "--suite", "full", "--seed", "0", "--report", str(report)])
    dt = time.perf_counter() - t0
    rep = json.loads(report.read_text())
    ok = same and code == 0 and rep["outcome"] == "PASS" and dt < 300
    criterion(10, ok, f"byte-identical {same}, selftest full {rep['outcome']} "
                      f"({rep['metrics']['passed']}/{rep['metrics']['total']}), {dt:.1f}s < 300s")
    assert ok

    # and the library call agrees with the command
    assert all(r.passed for r in run_suite("full", 0))
