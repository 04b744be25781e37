"""Simulation design: structured coefficients, Gaussian rows, Gaussian noise.

Random streams come from numpy's ``SeedSequence``: row ``i`` of the design
uses ``SeedSequence(seed, spawn_key=(0, i))`` and the noise uses
``spawn_key=(1,)``. Rows are therefore reproducible one at a time and in
any order.
"""
import numpy as np

COVARIANCES = ("identity", "ar1")
_ALIASES = {"id": "identity", "identity": "identity", "ar1": "ar1"}


def true_beta(p):
    """Structured coefficients: six spikes and a block of 0.3 (41 nonzeros)."""
    p = int(p)
    if p < 50:
        raise ValueError(f"the coefficient pattern needs p >= 50, got {p}")
    b = np.zeros(p)
    # 1-based positions 1, 3, 5, 8, 10, 13 and the run 16..50
    b[[0, 2, 4, 7, 9, 12]] = (2.0, 1.5, 0.8, 1.0, 1.75, 0.75)
    b[15:50] = 0.3
    return b


def mean_pattern(p):
    """Column means: 10 on 3..7, 5 on 70..90, -2 on floor(p/2)..floor(2p/3) (1-based, clipped)."""
    mu = np.zeros(p)
    mu[2:7] = 10.0
    mu[69:90] = 5.0
    mu[p // 2 - 1: (2 * p) // 3] = -2.0
    return mu


def _row_streams(seed, n):
    root = np.random.SeedSequence(seed)
    return [np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(0, i)))
            for i in range(n)]


def gen_design(n, p, cov="identity", seed=0, rho=0.5):
    """Draw ``n`` rows with the structured means and the chosen covariance.

    Parameters
    ----------
    n, p : int
    cov : {"identity", "id", "ar1"}
        ``"ar1"`` gives ``Cov(x_i, x_j) = rho**|i - j|`` through the
        recursion ``x_j = mu_j + rho (x_{j-1} - mu_{j-1}) + sqrt(1 - rho^2) z_j``.
    seed : int
    rho : float
        AR(1) coefficient, used only with ``cov="ar1"``.

    Returns
    -------
    ndarray, shape (n, p), column-major
    """
    n, p = int(n), int(p)
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    kind = _ALIASES.get(cov)
    if kind is None:
        raise ValueError(f"cov must be one of {COVARIANCES}, got {cov!r}")
    Z = np.empty((n, p))
    for i, rng in enumerate(_row_streams(seed, n)):
        Z[i] = rng.standard_normal(p)
    if kind == "ar1":
        if not -1 < rho < 1:
            raise ValueError("rho must lie in (-1, 1)")
        s = np.sqrt(1.0 - rho * rho)
        for j in range(1, p):
            Z[:, j] = rho * Z[:, j - 1] + s * Z[:, j]
    return np.asfortranarray(Z + mean_pattern(p))


def gen_response(X, beta_star, noise_sd=0.1, seed=0):
    """``y = X beta_star + eps`` with ``eps ~ N(0, noise_sd**2)`` i.i.d."""
    X = np.asarray(X, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float)
    if X.ndim != 2 or beta_star.shape != (X.shape[1],):
        raise ValueError("beta_star length must match the number of columns of X")
    if noise_sd < 0:
        raise ValueError("noise_sd must be nonnegative")
    root = np.random.SeedSequence(seed)
    rng = np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(1,)))
    eps = rng.standard_normal(X.shape[0])
    return X @ beta_star + noise_sd * eps


def simulate(n, p, cov="identity", seed=0, noise_sd=0.1):
    """Design and response of the simulation study; returns ``(X, y, beta_star)``."""
    X = gen_design(n, p, cov, seed)
    b = true_beta(p)
    return X, gen_response(X, b, noise_sd, seed), b
