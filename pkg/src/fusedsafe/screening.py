"""Safe identification of zero and fused coefficients before solving.

Given a dual solution at a larger ``lambda1`` on the same ``lambda2`` track,
the dual solution at the target point lies in a ball whose center and
radius are cheap to compute. Bounding the dual constraints over that ball
certifies coefficients that must be zero and adjacent pairs that must be
equal. Indices in this module are 0-based: coefficient ``j`` and pair ``j``
(the link between coefficients ``j`` and ``j + 1``).
"""
from dataclasses import dataclass

import numpy as np

from .problem import as_lambda

ELIMINATED = -1
FUSE_MODES = ("off", "endpoint", "all")


class ConstantDirectionError(ValueError):
    """``X @ 1`` vanishes, so the constant coefficient vector is not identifiable."""


class ZeroXiError(ValueError):
    """The best constant coefficient is 0; the all-equal bound does not apply."""


def lambda1_max(problem, lambda2):
    """Smallest ``lambda1`` guaranteed to give the all-zero solution.

    ``max(2*lambda2 + k1, lambda2 + k2)`` with ``k1`` the largest interior
    ``|X_j.T y|`` (``-inf`` when ``p == 2``) and ``k2`` the larger endpoint
    value. Sufficient for ``beta = 0`` at every ``lambda2 >= 0``.
    """
    lambda2 = float(lambda2)
    if not np.isfinite(lambda2) or lambda2 < 0:
        raise ValueError("lambda2 must be finite and nonnegative")
    a = np.abs(problem.xty)
    k2 = max(a[0], a[-1])
    k1 = a[1:-1].max() if a.shape[0] > 2 else -np.inf
    return float(max(2.0 * lambda2 + k1, lambda2 + k2))


def best_constant(problem, lambda1):
    """Optimal ``xi`` for ``beta = xi * 1`` under an l1 weight ``lambda1 * p``."""
    x1 = problem.X.sum(axis=1)
    nrm2 = float(x1 @ x1)
    if nrm2 == 0.0:
        raise ConstantDirectionError("X @ 1 is zero")
    s = float(x1 @ problem.y)
    return np.sign(s) * max(abs(s) - lambda1 * problem.p, 0.0) / nrm2, x1


def lambda2_max(problem, lambda1, variant="proof"):
    """Smallest ``lambda2`` at which an all-equal solution exists.

    Parameters
    ----------
    lambda1 : float
    variant : {"proof", "printed"}
        ``"proof"`` scales ``X.T X 1`` by ``xi`` in every partial sum.
        ``"printed"`` drops ``xi`` from the partial sums, which is only
        kept for auditing.

    Raises
    ------
    ConstantDirectionError
        If ``X @ 1 == 0``.
    ZeroXiError
        If the best constant is exactly zero.
    """
    lambda1 = float(lambda1)
    if not np.isfinite(lambda1) or lambda1 < 0:
        raise ValueError("lambda1 must be finite and nonnegative")
    xi, x1 = best_constant(problem, lambda1)
    if xi == 0.0:
        raise ZeroXiError("best constant coefficient is 0")
    sg = 1.0 if xi > 0 else -1.0
    xtx1 = problem.X.T @ x1
    last = problem.xty[-1] - xi * xtx1[-1] - lambda1 * sg
    scale = xi if variant == "proof" else 1.0
    if variant not in ("proof", "printed"):
        raise ValueError(f"unknown variant {variant!r}")
    g = problem.xty - scale * xtx1 - lambda1 * sg
    partial = np.cumsum(g)[:-1]
    return float(max(np.abs(partial).max(), abs(last)))


@dataclass(frozen=True)
class DualBall:
    """Ball ``{u : ||u - center|| <= radius}`` containing the dual solution."""

    center: np.ndarray
    radius: float


def dual_ball(problem, lam, lam1_ref, u_ref):
    """Ball around the dual solution at ``lam`` from one at ``(lam1_ref, lambda2)``.

    ``center = 0.5 * ((1 + t) y - t u_ref)`` with ``t = lambda1 / lam1_ref``
    and ``radius = ||center||``. ``u_ref`` must be the exact dual solution
    ``y - X beta`` at ``(lam1_ref, lambda2)`` with ``lam1_ref`` at most
    ``lambda1_max(lambda2)``.

    When ``lambda1 == lam1_ref`` the dual solution is ``u_ref`` itself and a
    radius-0 ball is returned.
    """
    l1, _ = as_lambda(lam)
    lam1_ref = float(lam1_ref)
    u_ref = np.asarray(u_ref, dtype=float)
    if u_ref.shape != (problem.n,):
        raise ValueError(f"u_ref must have length {problem.n}")
    if not (l1 > 0 and lam1_ref > 0):
        raise ValueError("lambda1 and lam1_ref must be positive")
    if l1 > lam1_ref:
        raise ValueError(f"lambda1={l1} must not exceed the reference {lam1_ref}")
    if l1 == lam1_ref:
        return DualBall(u_ref.copy(), 0.0)
    t = l1 / lam1_ref
    c = 0.5 * ((1.0 + t) * problem.y - t * u_ref)
    return DualBall(c, float(np.linalg.norm(c)))


@dataclass(frozen=True)
class ScreenReport:
    """Certificates at one ``(lambda1, lambda2)``.

    Attributes
    ----------
    zero_mask : ndarray of bool, shape (p,)
        Coefficients certified zero.
    fuse_endpoint_mask : ndarray of bool, shape (p - 1,)
        Pairs certified equal by the end-of-chain rule (pairs ``0`` and ``p - 2``).
    fuse_interior_mask : ndarray of bool, shape (p - 1,)
        Pairs flagged by the interior rule. Not proven safe; only used when
        explicitly requested.
    scores : ndarray, shape (p,)
        ``|X_j.T c| + r ||X_j||``.
    lambdas : LambdaPair
    """

    zero_mask: np.ndarray
    fuse_endpoint_mask: np.ndarray
    fuse_interior_mask: np.ndarray
    scores: np.ndarray
    lambdas: object

    @property
    def zero_set(self):
        return np.flatnonzero(self.zero_mask)

    @property
    def fuse_set(self):
        return np.flatnonzero(self.fuse_endpoint_mask | self.fuse_interior_mask)

    def fuse_mask(self, mode="endpoint"):
        if mode not in FUSE_MODES:
            raise ValueError(f"fuse mode must be one of {FUSE_MODES}")
        if mode == "off":
            return np.zeros_like(self.fuse_endpoint_mask)
        if mode == "endpoint":
            return self.fuse_endpoint_mask.copy()
        return self.fuse_endpoint_mask | self.fuse_interior_mask


def empty_report(p, lam):
    return ScreenReport(np.zeros(p, bool), np.zeros(p - 1, bool), np.zeros(p - 1, bool),
                        np.zeros(p), as_lambda(lam))


def screen_scores(problem, ball):
    if ball.center.shape != (problem.n,):
        raise ValueError(f"ball center must have length {problem.n}")
    return np.abs(problem.X.T @ ball.center) + ball.radius * problem.col_norms


def screen(problem, lam, ball, endpoint_rule="corrected"):
    """Apply the zero and fusion rules with one pass over the columns.

    Zero rule: ``s_j < lambda1 - lambda2`` at the two ends of the chain,
    ``s_j < lambda1 - 2 lambda2`` inside. Fusion rule at the ends:
    pair 0 when ``s_0 < lambda2 - lambda1`` and pair ``p - 2`` when
    ``s_{p-1} < lambda2 - lambda1``. Interior pairs are flagged when
    ``s_j < 2 lambda2 + lambda1`` (reported, not trusted).

    Parameters
    ----------
    endpoint_rule : {"corrected", "literal"}
        ``"literal"`` tests pair ``p - 2`` with ``s_{p-2}`` instead of
        ``s_{p-1}``; it is unsafe and exists only for the audit.
    """
    lam = as_lambda(lam).require_positive()
    l1, l2 = lam
    s = screen_scores(problem, ball)
    p = problem.p
    zero = np.empty(p, dtype=bool)
    zero[[0, -1]] = s[[0, -1]] < l1 - l2
    zero[1:-1] = s[1:-1] < l1 - 2.0 * l2
    if endpoint_rule not in ("corrected", "literal"):
        raise ValueError(f"unknown endpoint_rule {endpoint_rule!r}")
    end = np.zeros(p - 1, dtype=bool)
    tail = s[-1] if endpoint_rule == "corrected" else s[-2]
    end[0] = s[0] < l2 - l1
    end[-1] = end[-1] | (tail < l2 - l1)
    inner = np.zeros(p - 1, dtype=bool)
    if p > 3:
        inner[1:-1] = s[1:-2] < 2.0 * l2 + l1
    return ScreenReport(zero, end, inner, s, lam)


@dataclass(frozen=True, eq=False)
class ReducedProblem:
    """Problem restricted to surviving groups of consecutive features.

    Attributes
    ----------
    design : ndarray, shape (n, k)
        Column ``g`` is the sum of the original columns in group ``g``.
    y : ndarray, shape (n,)
    weights : ndarray, shape (k,)
        Group sizes.
    group_of : ndarray of int, shape (p,)
        Group index of every feature, ``ELIMINATED`` (-1) if removed.
    starts, stops : ndarray of int, shape (k,)
        Half-open original index range ``[start, stop)`` of each group.
    links : ndarray of bool, shape (k - 1,)
        True when groups ``g`` and ``g + 1`` are adjacent in the original
        chain (no eliminated feature between them).
    edge_counts : ndarray of int, shape (k,)
        Number of eliminated features adjacent to each group (0, 1 or 2);
        each contributes ``lambda2 * |gamma_g|`` to the objective.
    p : int
        Original number of features.
    """

    design: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    group_of: np.ndarray
    starts: np.ndarray
    stops: np.ndarray
    links: np.ndarray
    edge_counts: np.ndarray
    p: int

    @property
    def k(self):
        return self.design.shape[1]

    @property
    def groups(self):
        """Ordered list of ``(start, stop)`` ranges."""
        return list(zip(self.starts.tolist(), self.stops.tolist()))


def _fuse_arg(fuse):
    if fuse is True:
        return "endpoint"
    if fuse is False or fuse is None:
        return "off"
    if fuse not in FUSE_MODES:
        raise ValueError(f"fuse must be one of {FUSE_MODES}")
    return fuse


def build_reduction(problem, report, fuse="endpoint"):
    """Drop certified-zero features and merge certified-equal runs.

    A run of features joined by fused pairs is removed only if every member
    is certified zero; otherwise the whole run is kept and its zero
    certificates are ignored.

    Parameters
    ----------
    fuse : {"off", "endpoint", "all"} or bool
        Which fusion certificates to apply. ``True`` means ``"endpoint"``.
    """
    mode = _fuse_arg(fuse)
    p = problem.p
    zero = np.asarray(report.zero_mask, dtype=bool)
    if zero.shape != (p,):
        raise ValueError("report does not match the problem size")
    links = report.fuse_mask(mode)
    brk = np.empty(p, dtype=bool)
    brk[0] = True
    np.logical_not(links, out=brk[1:])
    starts = np.flatnonzero(brk)
    stops = np.append(starts[1:], p)
    dead = np.logical_and.reduceat(zero, starts)
    keep_starts, keep_stops = starts[~dead], stops[~dead]
    gid = np.cumsum(~dead) - 1
    gid[dead] = ELIMINATED
    group_of = np.repeat(gid, stops - starts)
    # gather kept columns, then add the remaining members of merged runs
    design = np.asfortranarray(problem.X[:, keep_starts])
    for g in np.flatnonzero(keep_stops - keep_starts > 1):
        design[:, g] += problem.X[:, keep_starts[g] + 1:keep_stops[g]].sum(axis=1)
    left = (keep_starts > 0) & (group_of[np.maximum(keep_starts - 1, 0)] == ELIMINATED)
    right = (keep_stops < p) & (group_of[np.minimum(keep_stops, p - 1)] == ELIMINATED)
    return ReducedProblem(
        design=design,
        y=problem.y,
        weights=(keep_stops - keep_starts).astype(float),
        group_of=group_of,
        starts=keep_starts,
        stops=keep_stops,
        links=keep_stops[:-1] == keep_starts[1:],
        edge_counts=left.astype(np.int64) + right.astype(np.int64),
        p=p,
    )


def expand_solution(rp, gamma):
    """Map reduced coefficients back to the original ``p`` features."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (rp.k,):
        raise ValueError(f"gamma must have length {rp.k}, got shape {gamma.shape}")
    beta = np.zeros(rp.p)
    live = rp.group_of != ELIMINATED
    beta[live] = gamma[rp.group_of[live]]
    return beta


def reduce_vector(rp, beta):
    """Group means of ``beta``: the warm start in reduced coordinates."""
    beta = np.asarray(beta, dtype=float)
    if rp.k == 0:
        return np.zeros(0)
    csum = np.concatenate(([0.0], np.cumsum(beta)))
    return (csum[rp.stops] - csum[rp.starts]) / (rp.stops - rp.starts)
