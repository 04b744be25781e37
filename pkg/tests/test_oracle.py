import numpy as np
import pytest

from fusedsafe import LambdaPair, make_problem, objective_value, solve_exact_small
from fusedsafe.oracle import MAX_ENUM, enumerate_chain
from fusedsafe.problem import chain_kkt_violation
from fusedsafe.screening import lambda1_max

from conftest import random_problem


def test_unpenalized_square_system(rng):
    X = rng.standard_normal((5, 5))
    y = rng.standard_normal(5)
    res = solve_exact_small(make_problem(X, y), (0.0, 0.0))
    np.testing.assert_allclose(res.beta, np.linalg.solve(X, y), atol=1e-10)


def test_zero_above_lambda1_max(rng):
    pr = random_problem(rng, 6, 5)
    l2 = 0.3
    res = solve_exact_small(pr, (lambda1_max(pr, l2) * 1.001, l2))
    np.testing.assert_array_equal(res.beta, 0.0)
    assert res.status == "oracle"


def test_gate():
    pr = make_problem(np.ones((3, MAX_ENUM + 1)), np.ones(3))
    with pytest.raises(ValueError):
        solve_exact_small(pr, (1.0, 1.0))


@pytest.mark.parametrize("seed", range(25))
def test_kkt_and_local_optimality(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(2, 9), rng.integers(2, 8)
    A = rng.standard_normal((n, m))
    y = rng.standard_normal(n) * 3
    c = rng.uniform(0, 2, m)
    mu = rng.uniform(0, 2, m - 1)
    z, f = enumerate_chain(y, c, mu, A=A)
    obj = lambda w: 0.5 * np.sum((y - A @ w) ** 2) + c @ np.abs(w) + mu @ np.abs(np.diff(w))
    assert f == pytest.approx(obj(z), rel=1e-12, abs=1e-12)
    for _ in range(200):
        assert f <= obj(z + rng.standard_normal(m) * rng.choice([1e-5, 1e-2, 1.0])) + 1e-10
    if n >= m:
        # strictly convex: the stationarity certificate must hold
        assert chain_kkt_violation(A.T @ (y - A @ z), z, c, mu, tol=1e-10) <= 1e-8


def test_rank_deficient_design_still_optimal(rng):
    # two identical columns: the minimizer is not unique, objective still minimal
    x = rng.standard_normal(5)
    X = np.column_stack([x, x, rng.standard_normal(5)])
    y = rng.standard_normal(5)
    pr = make_problem(X, y)
    lam = LambdaPair(0.1, 0.05)
    res = solve_exact_small(pr, lam)
    for _ in range(300):
        cand = res.beta + rng.standard_normal(3) * 0.1
        assert res.objective <= objective_value(pr, cand, lam) + 1e-10
