"""Brute-force exact solver for small chain-penalized least squares.

Solves

    minimize  0.5 * ||y - A z||^2 + sum_j c_j |z_j| + sum_j mu_j |z_j - z_{j+1}|

by trying every consistent joint sign pattern of ``(z, Dz)``. Each pattern
fixes a face of the penalty: runs of equal coordinates collapse to one free
variable (or to zero), and the stationarity condition on the face is a small
linear system. The candidate with the smallest true objective among the
sign-consistent ones is the minimizer. This path shares no code with the
iterative solvers, so it serves as ground truth in tests.

Cost grows like ``4.6**m``; ``m <= 10`` is the practical limit.
"""
from functools import lru_cache

import numpy as np

MAX_ENUM = 10
_CHUNK = 60000
_SINGULAR = 1e-12


@lru_cache(maxsize=None)
def _joint_table(m):
    # transitions (a_prev, d, a_next): equal zero values must fuse, differing
    # values fix the sign of the difference, equal nonzero signs leave d free
    a = np.array([[-1], [0], [1]], dtype=np.int8)
    d = np.zeros((3, 0), dtype=np.int8)
    for _ in range(m - 1):
        new_a, new_d = [], []
        last = a[:, -1]
        for prev in (-1, 0, 1):
            sel = last == prev
            if not sel.any():
                continue
            aa, dd = a[sel], d[sel]
            for nxt in (-1, 0, 1):
                if nxt != prev:
                    opts = (int(np.sign(prev - nxt)),)
                elif prev == 0:
                    opts = (0,)
                else:
                    opts = (-1, 0, 1)
                for dv in opts:
                    k = aa.shape[0]
                    new_a.append(np.hstack([aa, np.full((k, 1), nxt, np.int8)]))
                    new_d.append(np.hstack([dd, np.full((k, 1), dv, np.int8)]))
        a = np.vstack(new_a)
        d = np.vstack(new_d)
    return _index(a, d)


@lru_cache(maxsize=None)
def _tv_table(m):
    # TV-only problems: every run is free, signs of z are unconstrained
    grids = np.meshgrid(*([np.array([-1, 0, 1], np.int8)] * (m - 1)), indexing="ij")
    d = np.stack([g.ravel() for g in grids], axis=1) if m > 1 else np.zeros((1, 0), np.int8)
    a = np.full((d.shape[0], m), 2, dtype=np.int8)  # 2 = free
    return _index(a, d)


def _index(a, d):
    k, m = a.shape
    newrun = np.ones((k, m), dtype=bool)
    newrun[:, 1:] = d != 0
    run_id = np.cumsum(newrun, axis=1) - 1
    var_id = np.cumsum(newrun & (a != 0), axis=1) - 1
    var_id[a == 0] = -1
    nvar = (var_id.max(axis=1) + 1).astype(np.int64)
    order = np.argsort(nvar, kind="stable")
    a, d, var_id, nvar = a[order], d[order], var_id[order], nvar[order]
    bounds = np.searchsorted(nvar, np.arange(m + 2))
    for arr in (a, d, var_id, nvar):
        arr.setflags(write=False)
    del run_id
    return a, d, var_id, nvar, bounds


def _diff_matrix(m):
    D = np.zeros((m - 1, m))
    idx = np.arange(m - 1)
    D[idx, idx] = 1.0
    D[idx, idx + 1] = -1.0
    return D


def _objective(A, y, c, mu, Z, D):
    fit = y[None, :] - Z @ A.T if A is not None else y[None, :] - Z
    return (0.5 * np.einsum("ki,ki->k", fit, fit) + np.abs(Z) @ c
            + np.abs(Z @ D.T) @ mu)


def enumerate_chain(y, l1_weights, tv_weights, A=None):
    """Exact minimizer by sign-pattern enumeration.

    Parameters
    ----------
    y : array_like, shape (n,)
    l1_weights : array_like, shape (m,)
    tv_weights : array_like, shape (m - 1,)
    A : array_like, shape (n, m), optional
        Design; ``None`` means the identity (a proximal problem).

    Returns
    -------
    z : ndarray, shape (m,)
    objective : float
    """
    y = np.asarray(y, dtype=float)
    c = np.asarray(l1_weights, dtype=float)
    mu = np.asarray(tv_weights, dtype=float)
    m = c.shape[0]
    if m > MAX_ENUM:
        raise ValueError(f"enumeration limited to {MAX_ENUM} coefficients, got {m}")
    if mu.shape != (m - 1,):
        raise ValueError("tv_weights must have length m - 1")
    if A is None:
        if y.shape != (m,):
            raise ValueError("y must have length m when A is the identity")
        G = None
        Aty = y
        n = m
    else:
        A = np.asarray(A, dtype=float)
        if A.shape != (y.shape[0], m):
            raise ValueError("A must have shape (len(y), m)")
        G = A.T @ A
        Aty = A.T @ y
        n = A.shape[0]
    D = _diff_matrix(m)
    tv_only = not np.any(c > 0)
    a_tab, d_tab, var_tab, nvar, bounds = _tv_table(m) if tv_only else _joint_table(m)
    a_eff = np.where(a_tab == 2, 0, a_tab).astype(float)

    best_z, best_f = None, np.inf
    fallback_z, fallback_f = None, np.inf
    for k in range(1, m + 1):
        lo, hi = bounds[k], bounds[k + 1]
        if lo == hi or k > n:
            continue
        for s in range(lo, hi, _CHUNK):
            e = min(hi, s + _CHUNK)
            var = var_tab[s:e]
            K = e - s
            g = Aty[None, :] - a_eff[s:e] * c[None, :] - (d_tab[s:e] * mu[None, :]) @ D
            live = var >= 0
            row = np.broadcast_to(np.arange(K)[:, None], var.shape)
            slot = (row * k + var)[live]
            rhs = np.bincount(slot, weights=g[live], minlength=K * k).reshape(K, k)
            if G is None:
                # identity design: the face system is diagonal (run lengths)
                size = np.bincount(slot, minlength=K * k).reshape(K, k)
                gam = rhs / size
                ok = np.ones(K, dtype=bool)
            else:
                vi = np.where(live, var, k)  # k = sink slot for zero runs
                pair = ((row * (k + 1) + vi)[:, :, None] * (k + 1) + vi[:, None, :])
                M = np.bincount(pair.ravel(), weights=np.broadcast_to(G, pair.shape).ravel(),
                                minlength=K * (k + 1) ** 2).reshape(K, k + 1, k + 1)[:, :k, :k]
                diag = np.einsum("kvv->kv", M)
                sign, logdet = np.linalg.slogdet(M)
                with np.errstate(divide="ignore"):
                    hadamard = logdet - np.log(diag).sum(axis=1)
                ok = (sign > 0) & (hadamard > np.log(_SINGULAR))
                if not ok.any():
                    continue
                gam = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
            var_ok = var[ok]
            Z = np.where(var_ok >= 0, np.take_along_axis(gam, np.maximum(var_ok, 0), axis=1), 0.0)
            f = _objective(A, y, c, mu, Z, D)
            # sign consistency of the face, with slack for rounding
            tol = 1e-9 * max(1.0, np.abs(Z).max())
            a_ok = a_tab[s:e][ok]
            d_ok = d_tab[s:e][ok]
            free = a_ok == 2
            sz = np.where(np.abs(Z) <= tol, 0, np.sign(Z))
            za = (sz == a_ok) | free | ((a_ok != 0) & (np.abs(Z) <= tol) & (a_ok * Z >= -tol))
            DZ = Z @ D.T
            sd = np.where(np.abs(DZ) <= tol, 0, np.sign(DZ))
            zd = (d_ok == 0) | (sd == d_ok) | ((np.abs(DZ) <= tol) & (d_ok * DZ >= -tol))
            cons = za.all(axis=1) & zd.all(axis=1)
            i = int(np.argmin(f))
            if f[i] < fallback_f:
                fallback_f, fallback_z = f[i], Z[i]
            if cons.any():
                fc = np.where(cons, f, np.inf)
                i = int(np.argmin(fc))
                if fc[i] < best_f:
                    best_f, best_z = fc[i], Z[i]
    # the all-zero face has no free variable and is always a candidate
    z0 = np.zeros(m)
    f0 = 0.5 * float(y @ y)
    if f0 <= best_f:
        best_f, best_z = f0, z0
    if best_z is None:
        best_z, best_f = fallback_z, fallback_f
    return np.array(best_z, dtype=float), float(best_f)
