import numpy as np
import pytest

from fusedsafe import LambdaPair, make_problem
from fusedsafe.bench import (
    BRANCHES,
    SafetyViolation,
    audit_safety,
    path_rejection_ratios,
    rejection_ratio,
    speedup,
)
from fusedsafe.datagen import simulate
from fusedsafe.path import PathGrid, parse_ratio_grid, solve_path
from fusedsafe.screening import ScreenReport, lambda1_max

from conftest import random_problem


def _report(zero, end=None):
    p = len(zero)
    end = np.zeros(p - 1, bool) if end is None else np.asarray(end, bool)
    return ScreenReport(np.asarray(zero, bool), end, np.zeros(p - 1, bool), np.zeros(p),
                        LambdaPair(1.0, 1.0))


def test_ratio_zero_over_zero_is_one():
    assert rejection_ratio(_report([False] * 3), np.array([1.0, 2.0, 3.0])) == (1.0, 1.0)


def test_ratio_values():
    beta = np.array([0.0, 0.0, 1.0, 1.0])
    zo, comb = rejection_ratio(_report([True, False, False, False]), beta)
    # 1 of 2 zeros; pairs 0-1 and 2-3 are fused
    assert zo == 0.5
    assert comb == pytest.approx(1 / 4)
    zo, comb = rejection_ratio(_report([True, False, False, False], [False, False, True]), beta)
    assert comb == pytest.approx(2 / 4)


def test_more_screened_than_inactive_raises():
    with pytest.raises(SafetyViolation):
        rejection_ratio(_report([True, True, False]), np.array([0.0, 1.0, 2.0]))


def test_path_ratios_in_unit_interval():
    X, y, _ = simulate(25, 100, "ar1", seed=4)
    pr = make_problem(X, y)
    grid = PathGrid((1e-3, 1.0), parse_ratio_grid("0.1:0.1:1"))
    scr = solve_path(pr, grid)
    ref = solve_path(pr, grid, use_screening=False)
    out = path_rejection_ratios(scr, ref)
    assert len(out) == 2 * 9
    for _, _, a, b in out:
        assert 0.0 <= a <= 1.0 and 0.0 <= b <= 1.0


def test_speedup_reports_agreement():
    X, y, _ = simulate(20, 120, "id", seed=1)
    pr = make_problem(X, y)
    res = speedup(pr, PathGrid((0.01,), parse_ratio_grid("0.1:0.1:1")), repeats=1)
    assert res.valid and res.max_disagreement <= 1e-5
    assert res.speedup == pytest.approx(res.t_full / res.t_screened)
    assert len(res.screened) == len(res.reference) == 10


def test_audit_counts_literal_endpoint_violation():
    # same draw as the frozen counterexample in the screening tests
    rng = np.random.default_rng(345)
    n, p = rng.integers(3, 8), rng.integers(3, 7)
    pr = make_problem(rng.standard_normal((n, p)), rng.standard_normal(n))
    l2 = rng.uniform(0.2, 3)
    ratio = rng.uniform(0.05, 0.99)
    rep = audit_safety(pr, PathGrid((l2,), (1.0, ratio)))
    assert rep.points == 1
    assert rep.violations["fuse_endpoint_literal"] == 1
    assert rep.safe() and rep.first_violation is None


def test_audit_small_instances_are_safe(rng):
    grid = PathGrid((0.01, 0.3, 3.0), parse_ratio_grid("0.1:0.1:1"))
    for _ in range(3):
        pr = random_problem(rng, 6, 5)
        rep = audit_safety(pr, grid)
        assert set(rep.certificates) == set(BRANCHES)
        assert rep.points == 27 and rep.safe() and rep.ns_exceeds_nf == 0
        assert all(0 <= r <= 1 for *_, r in rep.ratios)


def test_audit_jobs_match():
    X, y, _ = simulate(20, 60, "id", seed=6)
    pr = make_problem(X, y)
    grid = PathGrid((1e-3, 1.0), parse_ratio_grid("0.2:0.2:1"))
    a = audit_safety(pr, grid)
    b = audit_safety(pr, grid, jobs=2)
    assert a.certificates == b.certificates and a.violations == b.violations
    assert a.points == b.points == 8
