"""Acceptance criteria 1-11, each at its stated tolerance.

Every test records one PASS/FAIL line that is printed in the terminal
summary. A criterion that is known not to hold is marked ``xfail`` with
``strict=True``: the full check still runs, the measured values are
printed, and the run errors if it ever starts passing unexpectedly.
"""
import time

import numpy as np
import pytest

from fusedsafe import (
    LambdaPair,
    SolverConfig,
    build_reduction,
    dual_ball,
    expand_solution,
    kkt_violation,
    lambda1_max,
    lambda2_max,
    make_problem,
    objective_value,
    prox_fused,
    prox_tv1d,
    solve,
    solve_exact_small,
    solve_reduced,
)
from fusedsafe.bench import audit_safety, path_rejection_ratios, speedup
from fusedsafe.datagen import gen_design, gen_response, simulate
from fusedsafe.oracle import enumerate_chain
from fusedsafe.path import PathGrid, solve_path
from fusedsafe.screening import ScreenReport, ZeroXiError

from conftest import ACCEPTANCE

pytestmark = pytest.mark.slow


def _record(num, ok, detail):
    ACCEPTANCE[num] = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[num])


def _small(rng, pmax=8):
    n, p = int(rng.integers(2, 9)), int(rng.integers(2, pmax + 1))
    return make_problem(rng.standard_normal((n, p)), rng.standard_normal(n))


def test_c01_oracle_equivalence():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_f = worst_b = 0.0
    for _ in range(200):
        pr = _small(rng)
        l2 = float(np.exp(rng.uniform(np.log(1e-3), np.log(2.0))))
        l1 = rng.uniform(0.02, 1.0) * lambda1_max(pr, l2)
        lam = LambdaPair(l1, l2)
        ref = solve_exact_small(pr, lam)
        res = solve(pr, lam)
        worst_f = max(worst_f, abs(res.objective - ref.objective) / abs(ref.objective))
        worst_b = max(worst_b, float(np.abs(res.beta - ref.beta).max()))
    dt = time.perf_counter() - t0
    ok = worst_f <= 1e-8 and worst_b <= 1e-6 and dt < 60
    _record(1, ok, f"max rel objective gap {worst_f:.2e}, max beta gap {worst_b:.2e}, {dt:.1f}s")
    assert ok


def test_c02_prox_correctness():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 9))
        x = rng.standard_normal(m) * rng.uniform(0.1, 5)
        t = rng.uniform(0, 2)
        l1 = rng.uniform(0, 2)
        z, _ = enumerate_chain(x, np.zeros(m), np.full(m - 1, t))
        worst = max(worst, float(np.abs(prox_tv1d(x, t) - z).max()))
        z, _ = enumerate_chain(x, np.full(m, l1), np.full(m - 1, t))
        worst = max(worst, float(np.abs(prox_fused(x, (l1, t)) - z).max()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 60
    _record(2, ok, f"max abs error {worst:.2e} over 1000 vectors, {dt:.1f}s")
    assert ok


def test_c03_lambda1_max():
    # lambda2 small relative to |X^T y|, where the bound is near-tight
    rng = np.random.default_rng(3)
    worst_kkt = 0.0
    active = 0
    for _ in range(50):
        pr = _small(rng)
        scale = np.abs(pr.xty).max()
        l2 = scale * float(np.exp(rng.uniform(np.log(1e-4), np.log(1e-2))))
        lmax = lambda1_max(pr, l2)
        worst_kkt = max(worst_kkt, kkt_violation(pr, np.zeros(pr.p), (lmax, l2)))
        beta = solve_exact_small(pr, (0.95 * lmax, l2)).beta
        active += bool(np.abs(beta).max() > 0)
    ok = worst_kkt <= 1e-10 and active >= 45
    _record(3, ok, f"kkt at lambda1_max {worst_kkt:.1e}, nonzero at 0.95x in {active}/50")
    assert ok


def test_c04_lambda2_max():
    rng = np.random.default_rng(4)
    worst = 0.0
    count = 0
    while count < 50:
        pr = _small(rng)
        pr = make_problem(pr.X, pr.y + rng.uniform(-3, 3))
        l1 = rng.uniform(0, 0.5)
        try:
            l2m = lambda2_max(pr, l1)
        except ZeroXiError:
            continue
        beta = solve_exact_small(pr, (l1, 1.01 * l2m)).beta
        worst = max(worst, float(np.abs(np.diff(beta)).max()))
        count += 1
    ok = worst <= 1e-8
    _record(4, ok, f"max |beta_j - beta_j+1| at 1.01 lambda2_max {worst:.1e} over 50")
    assert ok


def test_c05_ball_membership():
    rng = np.random.default_rng(5)
    ratios = np.linspace(1.0, 0.1, 10)
    fails = checks = 0
    worst = -np.inf
    for _ in range(50):
        pr = _small(rng)
        for l2 in (0.01, 0.3, 3.0):
            lmax = lambda1_max(pr, l2)
            ref_l1, u_ref = lmax, pr.y
            for r in ratios[1:]:
                lam = LambdaPair(r * lmax, l2)
                ball = dual_ball(pr, lam, ref_l1, u_ref)
                u = solve_exact_small(pr, lam).dual_u
                excess = np.linalg.norm(u - ball.center) - ball.radius
                worst = max(worst, excess)
                fails += excess > 1e-9
                checks += 1
                ref_l1, u_ref = lam.lambda1, u
    ok = fails == 0
    _record(5, ok, f"{fails} of {checks} duals outside the ball, max excess {worst:.1e}")
    assert ok


def test_c06_screening_safety():
    t0 = time.perf_counter()
    grid = PathGrid.standard()
    viol = {}
    certs = 0
    exceed = 0
    for cov in ("id", "ar1"):
        for seed in range(20):
            X, y, _ = simulate(50, 300, cov, seed=seed)
            rep = audit_safety(make_problem(X, y), grid)
            for b in ("zero_endpoint", "zero_interior", "fuse_endpoint"):
                viol[b] = viol.get(b, 0) + rep.violations[b]
                certs += rep.certificates[b]
            exceed += rep.ns_exceeds_nf
    dt = time.perf_counter() - t0
    ok = not any(viol.values()) and exceed == 0 and dt < 1800
    _record(6, ok, f"violations {viol} in {certs} certificates, 40 instances x 600 points, "
                   f"{dt:.0f}s")
    assert ok


def test_c07_path_self_consistency():
    X, y, _ = simulate(50, 500, "id", seed=7)
    pr = make_problem(X, y)
    cfg = SolverConfig(rel_tol=1e-10)
    grid = PathGrid.standard()
    scr = solve_path(pr, grid, cfg)
    full = solve_path(pr, grid, cfg, use_screening=False)
    worst = max(float(np.abs(a.beta - b.beta).max()) / max(1.0, float(np.abs(b.beta).max()))
                for a, b in zip(scr, full))
    ok = worst <= 1e-5
    _record(7, ok, f"max relative disagreement {worst:.1e} over 600 points")
    assert ok


@pytest.mark.xfail(strict=True, reason="measured rejection ratios fall below the thresholds; "
                                        "see the FAIL analysis in the decision ledger")
def test_c08_rejection_ratio_shape():
    X, y, _ = simulate(50, 1000, "id", seed=8)
    pr = make_problem(X, y)
    grid = PathGrid.standard()
    scr = solve_path(pr, grid)
    ref = solve_path(pr, grid, use_screening=False)
    rows = path_rejection_ratios(scr, ref)
    beyond01 = min(a for r, _, a, _ in rows if r > 0.1)
    beyond03 = min(a for r, _, a, _ in rows if r > 0.3)
    ok = beyond01 >= 0.8 and beyond03 >= 0.95
    _record(8, ok, f"min zero-only ratio {beyond01:.3f} for ratio > 0.1 (need 0.8), "
                   f"{beyond03:.3f} for ratio > 0.3 (need 0.95)")
    assert ok


def test_c09_speedup_direction():
    t0 = time.perf_counter()
    grid = PathGrid.standard()
    out = {}
    for p in (1000, 3000):
        X, y, _ = simulate(50, p, "id", seed=9)
        out[p] = speedup(make_problem(X, y), grid, repeats=3)
    dt = time.perf_counter() - t0
    s1, s3 = out[1000].speedup, out[3000].speedup
    valid = all(r.valid for r in out.values())
    ok = valid and s1 > 1 and s3 > 1 and s3 >= 0.8 * s1 and dt < 1200
    _record(9, ok, f"speedup {s1:.2f} at p=1000, {s3:.2f} at p=3000, paths agree={valid}, "
                   f"{dt:.0f}s")
    assert ok


def test_c10_reduction_equivalence():
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(100):
        pr = _small(rng)
        l2 = rng.uniform(0.01, 1.0)
        lam = LambdaPair(rng.uniform(0.05, 0.9) * lambda1_max(pr, l2), l2)
        beta = solve_exact_small(pr, lam).beta
        # a random subset of the true zeros and fused pairs is a valid report
        zero = (np.abs(beta) <= 1e-8) & (rng.random(pr.p) < 0.7)
        fused = (np.abs(np.diff(beta)) <= 1e-8) & (rng.random(pr.p - 1) < 0.7)
        end = np.zeros(pr.p - 1, bool)
        end[[0, -1]] = fused[[0, -1]]
        rep = ScreenReport(zero, end, fused & ~end, np.zeros(pr.p), lam)
        rp = build_reduction(pr, rep, fuse="all")
        red = solve_reduced(rp, lam)
        f_red = objective_value(pr, expand_solution(rp, red.beta), lam)
        f_full = solve(pr, lam).objective
        worst = max(worst, abs(f_red - f_full) / abs(f_full))
    ok = worst <= 1e-6
    _record(10, ok, f"max relative objective gap {worst:.1e} over 100 reduced solves")
    assert ok


def test_c11_datagen_statistics():
    X = gen_design(200_000, 4, "ar1", seed=11)
    Xc = X - X.mean(axis=0)
    cov = [float((Xc[:, j] * Xc[:, j + 1]).mean()) for j in range(3)]
    y = gen_response(np.zeros((100_000, 1)), np.zeros(1), noise_sd=0.1, seed=11)
    var = float(y.var())
    ok = all(abs(c - 0.5) <= 0.01 for c in cov) and abs(var - 0.01) <= 0.001
    _record(11, ok, "adjacent covariances " + ", ".join(f"{c:.4f}" for c in cov)
            + f", noise variance {var:.5f}")
    assert ok
