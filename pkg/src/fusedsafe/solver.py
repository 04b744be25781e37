"""Solvers for the fused Lasso and its weighted (reduced) variants.

Every problem handled here has the chain form

    minimize  0.5 * ||y - A z||^2 + sum_j c_j |z_j| + sum_j mu_j |z_j - z_{j+1}|

The full problem has ``c = lambda1`` and ``mu = lambda2``; reduced problems
carry per-group weights and broken links (``mu_j = 0``).

The workhorse is an accelerated proximal gradient method with
function-value restart. Once the iterates settle on a face of the penalty
(which coordinates are zero, which neighbours are equal), a polishing step
solves the stationarity system on that face exactly and keeps the result
only if it passes the KKT audit.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .oracle import MAX_ENUM, enumerate_chain
from .problem import (
    SolveResult,
    as_lambda,
    chain_kkt_violation,
    diff,
    make_result,
    objective_value,
)
from .prox import _prox_fused_fast, prox_chain

POLISH_LEVELS = (1e-9, 1e-7, 1e-5, 1e-3, 1e-2, 3e-2, 1e-1)
KKT_ACCEPT = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    Parameters
    ----------
    max_iters : int
    rel_tol : float
        Stop when the relative objective change of an accepted step is at
        most this and the KKT residual is at most
        ``max(100 * rel_tol, 1e-7) * max(1, ||A^T y||_inf)``.
    step_rule : {"power", "backtracking"}
        ``"power"`` starts from a power-iteration estimate of ``||A||^2``;
        ``"backtracking"`` starts from the largest squared column norm.
        Both double the estimate whenever the descent test fails.
    oracle_gate : int
        Largest ``p`` accepted by :func:`solve_exact_small`.
    polish : bool
        Try exact face solves at termination and every ``polish_every``
        iterations.
    """

    max_iters: int = 20000
    rel_tol: float = 1e-8
    step_rule: str = "power"
    oracle_gate: int = MAX_ENUM
    polish: bool = True
    polish_every: int = 50

    def __post_init__(self):
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.step_rule not in ("power", "backtracking"):
            raise ValueError(f"unknown step_rule {self.step_rule!r}")
        if self.oracle_gate > MAX_ENUM:
            raise ValueError(f"oracle_gate cannot exceed {MAX_ENUM}")


def power_lipschitz(A, iters=50, seed=0):
    """Estimate ``||A||_2^2`` by power iteration on the smaller Gram matrix."""
    n, m = A.shape
    G = A @ A.T if n <= m else A.T @ A
    v = np.random.default_rng(seed).standard_normal(G.shape[0])
    est = 0.0
    for _ in range(iters):
        w = G @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        est = float(v @ w) / float(v @ v)
        v = w / nrm
    return est


class _Chain:
    """Chain problem data with cached products."""

    def __init__(self, A, y, c, mu):
        self.A = A
        self.y = y
        self.m = A.shape[1]
        self.c = np.full(self.m, c, dtype=float) if np.ndim(c) == 0 else np.array(c, float)
        self.mu = (np.full(self.m - 1, mu, dtype=float) if np.ndim(mu) == 0
                   else np.array(mu, float))
        self.Aty = A.T @ y
        self.uniform = (np.all(self.c == self.c[0])
                        and (self.m == 1 or np.all(self.mu == self.mu[0])))
        self.kkt_scale = max(1.0, float(np.abs(self.Aty).max()))

    def penalty(self, z):
        return float(self.c @ np.abs(z)) + float(self.mu @ np.abs(z[:-1] - z[1:]))

    def prox(self, v, step, out):
        if self.uniform:
            l2 = self.mu[0] * step if self.m > 1 else 0.0
            return _prox_fused_fast(v, self.c[0] * step, l2, out)
        out[:] = prox_chain(v, self.c * step, self.mu * step)
        return out

    def objective(self, z, Az):
        r = Az - self.y
        return 0.5 * float(r @ r) + self.penalty(z)

    def kkt(self, z, Az, tol=None):
        return chain_kkt_violation(self.A.T @ (self.y - Az), z, self.c, self.mu, tol=tol)


def _face(z, rel):
    """Runs of equal coordinates and zero runs at threshold ``rel``."""
    tau = rel * max(1.0, float(np.abs(z).max()))
    zero = np.abs(z) <= tau
    fused = (np.abs(z[:-1] - z[1:]) <= tau) | (zero[:-1] & zero[1:])
    starts = np.flatnonzero(np.concatenate(([True], ~fused)))
    stops = np.append(starts[1:], z.shape[0])
    run_zero = np.logical_or.reduceat(zero, starts)
    return starts, stops, run_zero


def _polish_at(ch, z, rel):
    starts, stops, run_zero = _face(z, rel)
    free = ~run_zero
    k = int(free.sum())
    if k == 0:
        return np.zeros(ch.m)
    if k > ch.A.shape[0]:
        return None
    sums = np.add.reduceat(z, starts)
    sgn = np.sign(sums)
    if np.any(sgn[free] == 0):
        return None
    # run values fix the signs of the differences between consecutive runs
    vals = np.where(run_zero, 0.0, sums / (stops - starts))
    dsgn = np.sign(vals[:-1] - vals[1:])
    if np.any(dsgn == 0):
        return None
    AB = np.add.reduceat(ch.A, starts, axis=1)[:, free]
    c_run = np.add.reduceat(ch.c, starts)
    # D.T (mu * d) summed over a run telescopes to its two boundary links
    w = ch.mu[stops[:-1] - 1] * dsgn
    tv = np.zeros(len(starts))
    tv[:-1] += w
    tv[1:] -= w
    rhs = (AB.T @ ch.y) - (c_run * sgn)[free] - tv[free]
    M = AB.T @ AB
    try:
        cf = scipy.linalg.cho_factor(M, check_finite=False)
        gam = scipy.linalg.cho_solve(cf, rhs, check_finite=False)
    except (np.linalg.LinAlgError, ValueError):
        return None
    if not np.all(np.isfinite(gam)) or np.any(np.sign(gam) != sgn[free]):
        return None
    vals = np.zeros(len(starts))
    vals[free] = gam
    if np.any(np.sign(vals[:-1] - vals[1:]) != dsgn):
        return None
    return np.repeat(vals, stops - starts)


def _polish(ch, z, fz):
    """Exact face solve near ``z``; returns ``(z, Az, f)`` or ``None``."""
    for rel in POLISH_LEVELS:
        cand = _polish_at(ch, z, rel)
        if cand is None:
            continue
        Ac = ch.A @ cand
        fc = ch.objective(cand, Ac)
        if fc > fz + 1e-12 * max(1.0, abs(fz)):
            continue
        if ch.kkt(cand, Ac, tol=0.0) <= KKT_ACCEPT * ch.kkt_scale:
            return cand, Ac, fc
    return None


def _settled(ch, x, Ax, cfg):
    # a small objective change alone can hide a slow crawl along a face;
    # the floor keeps the gate above what unpolished iterates can reach
    return ch.kkt(x, Ax) <= max(100.0 * cfg.rel_tol, 1e-7) * ch.kkt_scale


def _apg(ch, x0, cfg, L=None):
    """Accelerated proximal gradient with restart; returns a dict."""
    A, y = ch.A, ch.y
    m = ch.m
    f0 = 0.5 * float(y @ y)
    x = np.zeros(m) if x0 is None else np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise FloatingPointError("starting point is not finite")
    Ax = A @ x
    fx = ch.objective(x, Ax)
    if not np.isfinite(fx):
        raise FloatingPointError("objective is not finite at the starting point")
    if fx > f0:
        x[:] = 0.0
        Ax = np.zeros_like(y)
        fx = f0
    if cfg.polish and x0 is not None:
        hit = _polish(ch, x, fx)
        if hit is not None:
            x, Ax, fx = hit
            return dict(z=x, Az=Ax, f=fx, iters=0, converged=True, delta=0.0, status="kkt")

    if L is None:
        if cfg.step_rule == "power":
            L = power_lipschitz(A)
        else:
            L = float((A * A).sum(axis=0).max())
    L = max(L, 1e-12)

    z = x.copy()
    Az = Ax.copy()
    t = 1.0
    out = np.empty(m)
    delta = np.inf
    status = "max_iters"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        r = Az - y
        fz_s = 0.5 * float(r @ r)
        grad = A.T @ r
        while True:
            v = np.ascontiguousarray(z - grad / L)
            xn = ch.prox(v, 1.0 / L, out).copy()
            Axn = A @ xn
            rn = Axn - y
            fn_s = 0.5 * float(rn @ rn)
            dz = xn - z
            # Az is extrapolated, not recomputed, so allow for its rounding error
            slack = 1e-14 * max(1.0, fz_s)
            if fn_s <= fz_s + float(grad @ dz) + 0.5 * L * float(dz @ dz) + slack:
                break
            L *= 2.0
            if not np.isfinite(L):
                raise FloatingPointError("step size underflow in backtracking")
        fn = fn_s + ch.penalty(xn)
        if not np.isfinite(fn):
            raise FloatingPointError("objective became non-finite; step size failure")
        if fn > fx:
            # function-value restart: drop momentum, retry from the last iterate
            if t == 1.0:
                # a plain proximal step cannot increase the objective; rounding only
                delta = abs(fn - fx) / max(1.0, abs(fx))
                if delta <= cfg.rel_tol and _settled(ch, x, Ax, cfg):
                    status = "rel_tol"
                    break
            t = 1.0
            z = x.copy()
            Az = Ax.copy()
            continue
        delta = (fx - fn) / max(abs(fn), 1e-300)
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / tn
        z = xn + beta * (xn - x)
        Az = Axn + beta * (Axn - Ax)
        x, Ax, fx, t = xn, Axn, fn, tn
        if delta <= cfg.rel_tol and _settled(ch, x, Ax, cfg):
            status = "rel_tol"
            break
        if cfg.polish and it % cfg.polish_every == 0:
            hit = _polish(ch, x, fx)
            if hit is not None:
                x, Ax, fx = hit
                status = "kkt"
                delta = 0.0
                break
    if cfg.polish and status != "kkt":
        hit = _polish(ch, x, fx)
        if hit is not None:
            x, Ax, fx = hit
            status = "kkt"
    converged = status in ("rel_tol", "kkt")
    return dict(z=x, Az=Ax, f=fx, iters=it, converged=converged, delta=float(delta), status=status)


def _zero_is_optimal(ch):
    return chain_kkt_violation(ch.Aty, np.zeros(ch.m), ch.c, ch.mu, tol=0.0) == 0.0


def solve(problem, lam, cfg=None, warm=None):
    """Solve the fused Lasso at one ``(lambda1, lambda2)``.

    Parameters
    ----------
    problem : Problem
    lam : LambdaPair or (float, float)
    cfg : SolverConfig, optional
    warm : array_like, shape (p,), optional
        Starting point.

    Returns
    -------
    SolveResult
    """
    cfg = cfg or SolverConfig()
    lam = as_lambda(lam)
    if warm is not None:
        warm = np.asarray(warm, dtype=float)
        if warm.shape != (problem.p,):
            raise ValueError(f"warm start must have length {problem.p}")
    ch = _Chain(problem.X, problem.y, lam.lambda1, lam.lambda2)
    if _zero_is_optimal(ch):
        return make_result(problem, np.zeros(problem.p), lam, iterations=0,
                           converged=True, termination_delta=0.0, status="closed_form")
    out = _apg(ch, warm, cfg)
    return make_result(problem, out["z"], lam, iterations=out["iters"],
                       converged=out["converged"], termination_delta=out["delta"],
                       status=out["status"])


def solve_exact_small(problem, lam, cfg=None):
    """Exact solution by sign-pattern enumeration (``p <= oracle_gate``)."""
    cfg = cfg or SolverConfig()
    lam = as_lambda(lam)
    if problem.p > cfg.oracle_gate:
        raise ValueError(f"p={problem.p} exceeds the enumeration gate {cfg.oracle_gate}")
    beta, f = enumerate_chain(problem.y, np.full(problem.p, lam.lambda1),
                              np.full(problem.p - 1, lam.lambda2), A=problem.X)
    return make_result(problem, beta, lam, iterations=0, converged=True,
                       termination_delta=0.0, status="oracle")


def reduced_weights(rp, lam):
    """Chain weights ``(c, mu)`` of a reduced problem at ``lam``."""
    l1, l2 = as_lambda(lam)
    c = l1 * np.asarray(rp.weights, float) + l2 * np.asarray(rp.edge_counts, float)
    mu = l2 * np.asarray(rp.links, float)
    return c, mu


def reduced_objective(rp, gamma, lam):
    c, mu = reduced_weights(rp, lam)
    gamma = np.asarray(gamma, dtype=float)
    r = rp.y - rp.design @ gamma
    return 0.5 * float(r @ r) + float(c @ np.abs(gamma)) + float(mu @ np.abs(diff(gamma)))


def _admm(ch, x0, cfg, rho=None):
    A, y, m = ch.A, ch.y, ch.m
    G = A.T @ A
    if rho is None:
        rho = max(1e-8, float(np.trace(G)) / m)
    DtD = np.zeros((m, m))
    if m > 1:
        i = np.arange(m - 1)
        DtD[i, i] += 1
        DtD[i + 1, i + 1] += 1
        DtD[i, i + 1] -= 1
        DtD[i + 1, i] -= 1
    cf = scipy.linalg.cho_factor(G + rho * (np.eye(m) + DtD))
    g = np.zeros(m) if x0 is None else np.array(x0, dtype=float)
    a = g.copy()
    b = diff(g)
    ua = np.zeros(m)
    ub = np.zeros(m - 1)
    f_old = np.inf
    delta = np.inf
    status = "max_iters"
    it = 0

    def dt(v):
        out = np.zeros(m)
        out[:-1] += v
        out[1:] -= v
        return out

    for it in range(1, cfg.max_iters + 1):
        g = scipy.linalg.cho_solve(cf, ch.Aty + rho * (a - ua) + rho * dt(b - ub))
        dg = diff(g)
        a_new = np.sign(g + ua) * np.maximum(np.abs(g + ua) - ch.c / rho, 0.0)
        b_new = np.sign(dg + ub) * np.maximum(np.abs(dg + ub) - ch.mu / rho, 0.0)
        ua += g - a_new
        ub += dg - b_new
        a, b = a_new, b_new
        fa = ch.objective(a, A @ a)
        if not np.isfinite(fa):
            raise FloatingPointError("objective became non-finite")
        delta = abs(f_old - fa) / max(abs(fa), 1e-300)
        f_old = fa
        prim = max(np.abs(g - a).max(), np.abs(dg - b).max() if m > 1 else 0.0)
        if delta <= cfg.rel_tol and prim <= np.sqrt(cfg.rel_tol) * max(1.0, np.abs(a).max()):
            status = "rel_tol"
            break
        if cfg.polish and it % cfg.polish_every == 0:
            hit = _polish(ch, a, fa)
            if hit is not None:
                return dict(z=hit[0], Az=hit[1], f=hit[2], iters=it, converged=True,
                            delta=0.0, status="kkt")
    Aa = A @ a
    fa = ch.objective(a, Aa)
    if cfg.polish:
        hit = _polish(ch, a, fa)
        if hit is not None:
            return dict(z=hit[0], Az=hit[1], f=hit[2], iters=it, converged=True,
                        delta=0.0, status="kkt")
    return dict(z=a, Az=Aa, f=fa, iters=it, converged=status == "rel_tol",
                delta=float(delta), status=status)


def solve_reduced(rp, lam, cfg=None, warm=None, method="apg"):
    """Solve a reduced problem in its own (group) coordinates.

    The reduced objective is

        0.5 ||y - Xr g||^2 + sum_g c_g |g_g| + sum_g mu_g |g_g - g_{g+1}|

    with ``c_g = lambda1 * w_g + lambda2 * e_g`` (``e_g`` counts eliminated
    features adjacent to the group) and ``mu_g = lambda2`` across intact
    links, 0 across gaps. It equals the full objective of the expanded
    vector.

    Parameters
    ----------
    method : {"apg", "admm"}
        Accelerated proximal gradient with the exact weighted chain prox,
        or ADMM on the split ``a = g, b = D g``.

    Returns
    -------
    SolveResult
        In reduced coordinates: ``beta`` holds ``g``, ``dual_u`` is
        ``y - Xr g`` (equal to the full dual of the expanded solution).
    """
    cfg = cfg or SolverConfig()
    lam = as_lambda(lam)
    k = rp.design.shape[1]
    if warm is not None:
        warm = np.asarray(warm, dtype=float)
        if warm.shape != (k,):
            raise ValueError(f"warm start must have length {k}")
    if k == 0:
        return SolveResult(beta=np.zeros(0), dual_u=np.array(rp.y, dtype=float),
                           gamma=np.zeros(0), objective=0.5 * float(rp.y @ rp.y),
                           iterations=0, converged=True, status="closed_form")
    c, mu = reduced_weights(rp, lam)
    ch = _Chain(rp.design, rp.y, c, mu)
    if _zero_is_optimal(ch):
        out = dict(z=np.zeros(k), Az=np.zeros(rp.design.shape[0]), iters=0,
                   converged=True, delta=0.0, status="closed_form")
    elif method == "apg":
        out = _apg(ch, warm, cfg)
    elif method == "admm":
        out = _admm(ch, warm, cfg)
    else:
        raise ValueError(f"unknown method {method!r}")
    g = out["z"]
    return SolveResult(beta=g, dual_u=rp.y - rp.design @ g, gamma=diff(g),
                       objective=reduced_objective(rp, g, lam), iterations=out["iters"],
                       converged=out["converged"], termination_delta=out["delta"],
                       status=out["status"])


__all__ = [
    "SolverConfig",
    "power_lipschitz",
    "solve",
    "solve_exact_small",
    "solve_reduced",
    "reduced_objective",
    "reduced_weights",
    "objective_value",
]
