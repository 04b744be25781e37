"""Proximal operators for the l1 + fused (1-D total variation) penalty.

``prox_tv1d`` uses Condat's direct algorithm, ``prox_fused`` composes it
with soft-thresholding, and ``prox_chain`` handles per-coordinate l1
weights and per-link TV weights (zero weight = broken chain) with an exact
dynamic-programming pass over piecewise-linear derivatives.
"""
import numpy as np
from numba import njit


def _check_nonneg(name, t):
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"{name} must be a finite nonnegative number, got {t!r}")


def soft_threshold(x, t):
    """Coordinate-wise ``sign(x) * max(|x| - t, 0)``."""
    _check_nonneg("threshold", t)
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@njit(cache=True)
def _fill(out, k0, stop, v):
    # do-while: always writes at least one sample; returns the new k0
    out[k0] = v
    k0 += 1
    while k0 <= stop:
        out[k0] = v
        k0 += 1
    return k0


@njit(cache=True)
def _condat_tv(x, lam, out):
    # Condat (2013), "A direct algorithm for 1D total variation denoising".
    n = x.shape[0]
    k = 0
    k0 = 0
    kplus = 0
    kminus = 0
    umin = lam
    umax = -lam
    vmin = x[0] - lam
    vmax = x[0] + lam
    twolam = 2.0 * lam
    minlam = -lam
    # bounded condition instead of `while True`: numba miscompiles the latter here
    while k0 < n:
        while k == n - 1:
            if umin < 0.0:
                k0 = _fill(out, k0, kminus, vmin)
                k = k0
                kminus = k0
                vmin = x[k0]
                umin = lam
                umax = vmin + umin - vmax
            elif umax > 0.0:
                k0 = _fill(out, k0, kplus, vmax)
                k = k0
                kplus = k0
                vmax = x[k0]
                umax = minlam
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                _fill(out, k0, k, vmin)
                return
        umin += x[k + 1] - vmin
        if umin < minlam:
            k0 = _fill(out, k0, kminus, vmin)
            k = k0
            kplus = k0
            kminus = k0
            vmin = x[k0]
            vmax = vmin + twolam
            umin = lam
            umax = minlam
            continue
        umax += x[k + 1] - vmax
        if umax > lam:
            k0 = _fill(out, k0, kplus, vmax)
            k = k0
            kplus = k0
            kminus = k0
            vmax = x[k0]
            vmin = vmax - twolam
            umin = lam
            umax = minlam
            continue
        k += 1
        if umin >= lam:
            kminus = k
            vmin += (umin - lam) / (kminus - k0 + 1)
            umin = lam
        if umax <= minlam:
            kplus = k
            vmax += (umax + lam) / (kplus - k0 + 1)
            umax = minlam


def prox_tv1d(x, t):
    """Minimizer of ``0.5 * ||z - x||^2 + t * sum_j |z_j - z_{j+1}|``.

    Parameters
    ----------
    x : array_like, shape (m,)
    t : float
        Nonnegative TV weight.
    """
    _check_nonneg("t", t)
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x must be a nonempty 1-D vector")
    if t == 0.0 or x.size == 1:
        return x.copy()
    out = np.empty_like(x)
    _condat_tv(x, float(t), out)
    return out


def prox_fused(x, lam):
    """Prox of ``lambda1 ||z||_1 + lambda2 ||Dz||_1``.

    TV first, then soft-thresholding. The order matters: thresholding first
    is not the prox of the sum.
    """
    l1, l2 = (float(v) for v in lam)
    _check_nonneg("lambda1", l1)
    return soft_threshold(prox_tv1d(x, l2), l1)


def _prox_fused_fast(x, l1, l2, out):
    # Unchecked variant for the solver hot loop; ``x`` must be contiguous float.
    if l2 > 0.0 and x.shape[0] > 1:
        _condat_tv(x, l2, out)
    else:
        out[:] = x
    np.copysign(np.maximum(np.abs(out) - l1, 0.0), out, out=out)
    return out


@njit(cache=True)
def _chain_dp(x, c, mu, out):
    # Forward pass keeps the derivative of the partial-minimum message as a
    # nondecreasing piecewise-linear function: a left piece (aL*z + bL), a
    # right piece, and sorted knots (pos, dslope, dintercept) in a deque.
    m = x.shape[0]
    cap = 4 * m + 8
    pos = np.empty(cap)
    da = np.empty(cap)
    db = np.empty(cap)
    head = m + 2
    tail = m + 2  # knots live in [head, tail)
    lo = np.empty(m)
    hi = np.empty(m)
    aL = 0.0
    bL = 0.0
    aR = 0.0
    bR = 0.0
    for j in range(m):
        aL += 1.0
        aR += 1.0
        bL += -x[j] - c[j]
        bR += -x[j] + c[j]
        if c[j] > 0.0:
            # jump of 2c at z = 0; merge into an existing knot at 0 if present
            i = head
            while i < tail and pos[i] < 0.0:
                i += 1
            if i < tail and pos[i] == 0.0:
                db[i] += 2.0 * c[j]
            else:
                for s in range(tail, i, -1):
                    pos[s] = pos[s - 1]
                    da[s] = da[s - 1]
                    db[s] = db[s - 1]
                pos[i] = 0.0
                da[i] = 0.0
                db[i] = 2.0 * c[j]
                tail += 1
        if j == m - 1:
            break
        lvl = mu[j]
        # left clamp at -lvl
        a = aL
        b = bL
        while True:
            if head == tail:
                z = (-lvl - b) / a
                break
            t = pos[head]
            if a * t + b >= -lvl:
                z = (-lvl - b) / a
                break
            a2 = a + da[head]
            b2 = b + db[head]
            head += 1
            if a2 * t + b2 >= -lvl:
                z = t
                a = a2
                b = b2
                break
            a = a2
            b = b2
        lo[j] = z
        head -= 1
        pos[head] = z
        da[head] = a
        db[head] = b + lvl
        aL = 0.0
        bL = -lvl
        # right clamp at +lvl
        a = aR
        b = bR
        while True:
            if head == tail:
                # only reachable through rounding when lvl == 0
                z = lo[j]
                break
            t = pos[tail - 1]
            if a * t + b <= lvl:
                z = (lvl - b) / a
                break
            a2 = a - da[tail - 1]
            b2 = b - db[tail - 1]
            tail -= 1
            if a2 * t + b2 <= lvl:
                z = t
                a = a2
                b = b2
                break
            a = a2
            b = b2
        if z < lo[j]:
            z = lo[j]
        hi[j] = z
        pos[tail] = z
        da[tail] = -a
        db[tail] = lvl - b
        tail += 1
        aR = 0.0
        bR = lvl
    # root of the last message derivative
    a = aL
    b = bL
    z = 0.0
    while True:
        if head == tail:
            z = -b / a
            break
        t = pos[head]
        if a * t + b >= 0.0:
            z = -b / a
            break
        a2 = a + da[head]
        b2 = b + db[head]
        head += 1
        if a2 * t + b2 >= 0.0:
            z = t
            break
        a = a2
        b = b2
    out[m - 1] = z
    for j in range(m - 2, -1, -1):
        v = out[j + 1]
        if v < lo[j]:
            v = lo[j]
        elif v > hi[j]:
            v = hi[j]
        out[j] = v


def prox_chain(x, l1_weights, tv_weights):
    """Prox of ``sum_j c_j |z_j| + sum_j mu_j |z_j - z_{j+1}|``.

    Parameters
    ----------
    x : array_like, shape (m,)
    l1_weights : array_like, shape (m,)
        Nonnegative per-coordinate l1 weights ``c``.
    tv_weights : array_like, shape (m - 1,)
        Nonnegative per-link weights ``mu``; a zero weight decouples the
        chain at that link.
    """
    x = np.ascontiguousarray(x, dtype=float)
    c = np.ascontiguousarray(l1_weights, dtype=float)
    mu = np.ascontiguousarray(tv_weights, dtype=float)
    m = x.shape[0]
    if x.ndim != 1 or m == 0:
        raise ValueError("x must be a nonempty 1-D vector")
    if c.shape != (m,) or mu.shape != (m - 1,):
        raise ValueError("weight shapes must be (m,) and (m - 1,)")
    if np.any(c < 0) or np.any(mu < 0) or not (np.all(np.isfinite(c)) and np.all(np.isfinite(mu))):
        raise ValueError("weights must be finite and nonnegative")
    out = np.empty(m)
    _chain_dp(x, c, mu, out)
    return out
