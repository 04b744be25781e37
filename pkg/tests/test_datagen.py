import numpy as np
import pytest

from fusedsafe.datagen import gen_design, gen_response, mean_pattern, simulate, true_beta


def test_true_beta_entries():
    b = true_beta(100)
    # 1-based positions from the simulation design
    assert b[0] == 2.0 and b[9] == 1.75
    assert b[2] == 1.5 and b[4] == 0.8 and b[7] == 1.0 and b[12] == 0.75
    np.testing.assert_array_equal(b[15:50], 0.3)
    assert b[50] == 0.0
    assert np.count_nonzero(b) == 41


def test_true_beta_minimum_size():
    assert true_beta(50).shape == (50,)
    with pytest.raises(ValueError):
        true_beta(49)


def test_mean_pattern():
    mu = mean_pattern(300)
    np.testing.assert_array_equal(mu[2:7], 10.0)
    np.testing.assert_array_equal(mu[69:90], 5.0)
    np.testing.assert_array_equal(mu[149:200], -2.0)
    assert mu[1] == mu[7] == mu[68] == mu[90] == mu[148] == mu[200] == 0.0
    # clipped when p is small
    assert mean_pattern(4).shape == (4,)


def test_design_errors():
    with pytest.raises(ValueError):
        gen_design(0, 5)
    with pytest.raises(ValueError):
        gen_design(5, 5, cov="toeplitz")
    with pytest.raises(ValueError):
        gen_design(5, 5, cov="ar1", rho=1.0)


@pytest.mark.parametrize("cov", ["id", "identity", "ar1"])
def test_design_deterministic(cov):
    a = gen_design(20, 60, cov, seed=4)
    b = gen_design(20, 60, cov, seed=4)
    np.testing.assert_array_equal(a, b)
    assert a.flags.f_contiguous
    assert not np.array_equal(a, gen_design(20, 60, cov, seed=5))


def test_rows_are_independent_streams():
    a = gen_design(10, 30, "ar1", seed=9)
    b = gen_design(4, 30, "ar1", seed=9)
    np.testing.assert_array_equal(a[:4], b)


def test_rho_zero_matches_identity():
    np.testing.assert_array_equal(gen_design(15, 40, "ar1", seed=2, rho=0.0),
                                  gen_design(15, 40, "id", seed=2))


def test_identity_column_mean():
    n = 20000
    X = gen_design(n, 100, "id", seed=1)
    assert abs(X[:, 2].mean() - 10.0) <= 3.0 / np.sqrt(n)


def test_ar1_covariance_and_stationarity():
    X = gen_design(200_000, 4, "ar1", seed=0)
    Xc = X - X.mean(axis=0)
    for j in range(3):
        assert abs((Xc[:, j] * Xc[:, j + 1]).mean() - 0.5) <= 0.01
    np.testing.assert_allclose(Xc.var(axis=0), 1.0, rtol=0.02)


def test_noiseless_response():
    X = gen_design(10, 60, "id", seed=0)
    b = true_beta(60)
    np.testing.assert_array_equal(gen_response(X, b, noise_sd=0.0), X @ b)


def test_noise_variance():
    X = np.zeros((100_000, 2))
    y = gen_response(X, np.zeros(2), noise_sd=0.1, seed=3)
    assert abs(y.var() - 0.01) <= 0.001


def test_response_deterministic_and_checked():
    X = gen_design(30, 60, "id", seed=1)
    b = true_beta(60)
    assert gen_response(X, b, seed=8).tobytes() == gen_response(X, b, seed=8).tobytes()
    with pytest.raises(ValueError):
        gen_response(X, np.zeros(59))
    with pytest.raises(ValueError):
        gen_response(X, b, noise_sd=-1.0)


def test_simulate_shapes():
    X, y, b = simulate(12, 80, "ar1", seed=3)
    assert X.shape == (12, 80) and y.shape == (12,) and b.shape == (80,)
