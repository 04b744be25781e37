"""Fused Lasso problem instances, objective and dual evaluation, KKT audit.

The model is

    minimize  0.5 * ||y - X beta||^2 + lambda1 ||beta||_1 + lambda2 ||D beta||_1

with ``(D beta)_j = beta_j - beta_{j+1}``. ``D`` is never materialized.
"""
from dataclasses import dataclass, field

import numpy as np
from numba import njit

ZERO_RTOL = 1e-6


@dataclass(frozen=True)
class LambdaPair:
    """Regularization pair ``(lambda1, lambda2)``; both finite and >= 0."""

    lambda1: float
    lambda2: float

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {v!r}")
            object.__setattr__(self, name, v)

    def __iter__(self):
        yield self.lambda1
        yield self.lambda2

    def require_positive(self):
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ValueError("screening needs lambda1 > 0 and lambda2 > 0")
        return self


def as_lambda(lam):
    return lam if isinstance(lam, LambdaPair) else LambdaPair(*lam)


@dataclass(frozen=True, eq=False)
class Problem:
    """Design, response and lambda-independent caches.

    Attributes
    ----------
    X : ndarray, shape (n, p)
        Column-major, read-only.
    y : ndarray, shape (n,)
    col_norms : ndarray, shape (p,)
        Euclidean norms of the columns of ``X``.
    xty : ndarray, shape (p,)
        ``X.T @ y``.
    """

    X: np.ndarray
    y: np.ndarray
    col_norms: np.ndarray = field(repr=False)
    xty: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def make_problem(X, y):
    """Validate inputs and build an immutable :class:`Problem`."""
    X = np.array(X, dtype=float, order="F", copy=True)
    y = np.array(y, dtype=float, copy=True)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if y.ndim != 1:
        raise ValueError("y must be a 1-D vector")
    n, p = X.shape
    if n < 1:
        raise ValueError("X needs at least one row")
    if p < 2:
        raise ValueError(f"need at least 2 features for the difference operator, got p={p}")
    if y.shape[0] != n:
        raise ValueError(f"y has length {y.shape[0]} but X has {n} rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("X and y must be finite")
    col_norms = np.sqrt(np.einsum("ij,ij->j", X, X))
    xty = X.T @ y
    for arr in (X, y, col_norms, xty):
        arr.setflags(write=False)
    return Problem(X, y, col_norms, xty)


def diff(beta):
    """``D beta``."""
    beta = np.asarray(beta, dtype=float)
    return beta[:-1] - beta[1:]


def diff_adjoint(v):
    """``D.T v`` for ``v`` of length ``p - 1``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[0] + 1)
    out[:-1] += v
    out[1:] -= v
    return out


def zero_threshold(beta):
    """Magnitude at or below which a coefficient of ``beta`` counts as zero."""
    beta = np.asarray(beta)
    scale = float(np.abs(beta).max()) if beta.size else 0.0
    return ZERO_RTOL * max(1.0, scale)


def zero_mask(beta):
    beta = np.asarray(beta, dtype=float)
    return np.abs(beta) <= zero_threshold(beta)


def fused_mask(beta):
    beta = np.asarray(beta, dtype=float)
    return np.abs(diff(beta)) <= zero_threshold(beta)


def _check_beta(problem, beta):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (problem.p,):
        raise ValueError(f"beta must have length {problem.p}, got shape {beta.shape}")
    return beta


def objective_value(problem, beta, lam):
    """``0.5 ||y - X beta||^2 + lambda1 ||beta||_1 + lambda2 ||D beta||_1``."""
    beta = _check_beta(problem, beta)
    l1, l2 = as_lambda(lam)
    r = problem.y - problem.X @ beta
    return 0.5 * float(r @ r) + l1 * float(np.abs(beta).sum()) + l2 * float(np.abs(diff(beta)).sum())


def dual_feasibility_violation(problem, u, v, lam):
    """Amounts by which ``(u, v)`` leaves the dual feasible set.

    Returns
    -------
    (float, float)
        ``max(0, ||X.T u - D.T v||_inf - lambda1)`` and
        ``max(0, ||v||_inf - lambda2)``.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (problem.n,):
        raise ValueError(f"u must have length {problem.n}")
    if v.shape != (problem.p - 1,):
        raise ValueError(f"v must have length {problem.p - 1}")
    l1, l2 = as_lambda(lam)
    a = np.abs(problem.X.T @ u - diff_adjoint(v)).max()
    b = np.abs(v).max() if v.size else 0.0
    return max(0.0, float(a) - l1), max(0.0, float(b) - l2)


@njit(cache=True)
def _chain_feasible(rlo, rhi, vlo, vhi, eps):
    # Can v_j = v_{j-1} + r_j + e_j, |e_j| <= eps, r_j in [rlo, rhi],
    # v_j in [vlo, vhi], v_{-1} = v_{m-1} = 0 be satisfied?
    m = rlo.shape[0]
    a = 0.0
    b = 0.0
    for j in range(m - 1):
        a = max(a + rlo[j] - eps, vlo[j])
        b = min(b + rhi[j] + eps, vhi[j])
        if a > b:
            return False
    return a + rlo[m - 1] - eps <= 0.0 <= b + rhi[m - 1] + eps


@njit(cache=True)
def _chain_min_eps(rlo, rhi, vlo, vhi, hi):
    if _chain_feasible(rlo, rhi, vlo, vhi, 0.0):
        return 0.0
    lo = 0.0
    # feasibility is monotone in eps; stop at 1e-9 relative width
    for _ in range(200):
        if hi - lo <= 1e-9 * hi:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _chain_feasible(rlo, rhi, vlo, vhi, mid):
            hi = mid
        else:
            lo = mid
    return hi


def chain_kkt_violation(grad, beta, l1_weights, tv_weights, tol=None):
    """Exact infinity-norm distance of ``grad`` to the chain subdifferential.

    Computes the smallest ``eps`` (to 1e-9 relative, rounded up) such that
    ``grad in C d|beta| + D.T (M d|D beta|) + [-eps, eps]^m``, where ``grad``
    is the negative smooth gradient ``A.T (y - A beta)``, ``C`` and ``M`` are
    diagonal weights. The shared variables of neighbouring coordinates are
    propagated as intervals along the chain, so the answer is exact rather
    than a coordinate-wise relaxation.

    Parameters
    ----------
    tol : float, optional
        Magnitude at or below which coefficients and differences count as
        zero. Defaults to the module-wide relative zero tolerance.
    """
    g = np.asarray(grad, dtype=float)
    beta = np.asarray(beta, dtype=float)
    c = np.broadcast_to(np.asarray(l1_weights, dtype=float), beta.shape)
    mu = np.broadcast_to(np.asarray(tv_weights, dtype=float), (beta.shape[0] - 1,))
    if tol is None:
        tol = zero_threshold(beta)
    zb = np.abs(beta) <= tol
    sb = np.sign(beta)
    olo = np.where(zb, -c, c * sb)
    ohi = np.where(zb, c, c * sb)
    db = diff(beta)
    zd = np.abs(db) <= tol
    sd = np.sign(db)
    vlo = np.where(zd, -mu, mu * sd)
    vhi = np.where(zd, mu, mu * sd)
    rlo = np.ascontiguousarray(g - ohi)
    rhi = np.ascontiguousarray(g - olo)
    # a feasible eps: midpoints of every admissible set
    vm = 0.5 * (vlo + vhi)
    e = 0.5 * (rlo + rhi) - diff_adjoint(vm)
    hi = float(np.abs(e).max()) + 1e-300
    return float(_chain_min_eps(rlo, rhi, np.ascontiguousarray(vlo), np.ascontiguousarray(vhi), hi))


def kkt_violation(problem, res, lam, tol=None):
    """Worst violation of the fused Lasso stationarity condition.

    ``res`` is a :class:`SolveResult` or a coefficient vector. Returns 0 at
    an exact solution.
    """
    beta = _check_beta(problem, getattr(res, "beta", res))
    l1, l2 = as_lambda(lam)
    grad = problem.X.T @ (problem.y - problem.X @ beta)
    return chain_kkt_violation(grad, beta, l1, l2, tol=tol)


@dataclass
class SolveResult:
    """Primal solution with its dual ``u = y - X beta`` and ``gamma = D beta``.

    ``status`` records why the solver stopped: ``"rel_tol"``, ``"kkt"``
    (an exact face solve passed the KKT audit), ``"max_iters"``, ``"oracle"``
    or ``"closed_form"``.
    """

    beta: np.ndarray
    dual_u: np.ndarray
    gamma: np.ndarray
    objective: float
    iterations: int = 0
    converged: bool = True
    termination_delta: float = 0.0
    status: str = "rel_tol"


def make_result(problem, beta, lam, **meta):
    beta = np.asarray(beta, dtype=float).copy()
    meta.setdefault("objective", objective_value(problem, beta, lam))
    return SolveResult(beta=beta, dual_u=problem.y - problem.X @ beta, gamma=diff(beta), **meta)
