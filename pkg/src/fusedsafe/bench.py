"""Rejection ratios, path speedup and the screening safety audit."""
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .oracle import MAX_ENUM
from .path import solve_path
from .problem import LambdaPair, fused_mask, zero_mask
from .screening import dual_ball, lambda1_max, screen
from .solver import SolverConfig, solve, solve_exact_small

BRANCHES = ("zero_endpoint", "zero_interior", "fuse_endpoint", "fuse_interior",
            "fuse_endpoint_literal")
ORACLE_TOL = 1e-8


class SafetyViolation(RuntimeError):
    """More features were screened than are actually inactive."""


def _ratio(ns, nf):
    if ns > nf:
        raise SafetyViolation(f"screened {ns} but only {nf} are inactive")
    if nf == 0:
        return 1.0
    return ns / nf


def rejection_ratio(report, exact, fuse="endpoint"):
    """Screened over actual counts at one grid point.

    Returns
    -------
    (float, float)
        Zero-only ratio ``|zero_set| / #{j : beta_j = 0}`` and the combined
        ratio that also counts fused pairs in both numerator and
        denominator. ``0 / 0`` is 1.

    Raises
    ------
    SafetyViolation
        If a numerator exceeds its denominator.
    """
    beta = getattr(exact, "beta", exact)
    nz = int(np.asarray(report.zero_mask).sum())
    nf = int(zero_mask(beta).sum())
    nfuse = int(report.fuse_mask(fuse).sum())
    nfused = int(fused_mask(beta).sum())
    return _ratio(nz, nf), _ratio(nz + nfuse, nf + nfused)


def path_rejection_ratios(screened, reference, fuse="endpoint"):
    """Per-point ``(ratio, zero_only, combined)`` from two path runs.

    Points at ratio 1 (no screening needed) are skipped.
    """
    out = []
    for s, r in zip(screened, reference):
        if s.report is None:
            continue
        a, b = rejection_ratio(s.report, r.beta, fuse)
        out.append((s.ratio, s.lambda2, a, b))
    return out


@dataclass
class SpeedupResult:
    """``speedup = t_full / t_screened`` with the agreement gate."""

    t_full: float
    t_screened: float
    speedup: float
    max_disagreement: float
    valid: bool
    screened: list = field(default=None, repr=False)
    reference: list = field(default=None, repr=False)


def _timed_path(problem, grid, cfg, use_screening, fuse, method):
    t0 = time.perf_counter()
    pts = solve_path(problem, grid, cfg, use_screening=use_screening, fuse=fuse,
                     method=method)
    return time.perf_counter() - t0, pts


def speedup(problem, grid, cfg=None, fuse="endpoint", repeats=3, method="apg"):
    """Median wall-clock ratio of full-data paths to screened paths.

    Screening time counts toward the screened total. One untimed solve
    warms caches and compiled kernels first. The result is flagged invalid
    unless both paths agree at every point within
    ``1e-5 * max(1, ||beta||_inf)``.
    """
    cfg = cfg or SolverConfig()
    l2 = grid.lambda2_values[0]
    solve(problem, LambdaPair(0.5 * lambda1_max(problem, l2), l2), cfg)
    tf, ts = [], []
    full = scr = None
    for _ in range(repeats):
        t, full = _timed_path(problem, grid, cfg, False, fuse, method)
        tf.append(t)
        t, scr = _timed_path(problem, grid, cfg, True, fuse, method)
        ts.append(t)
    gap = 0.0
    for a, b in zip(scr, full):
        gap = max(gap, float(np.abs(a.beta - b.beta).max()) / max(1.0, float(np.abs(b.beta).max())))
    t_full, t_scr = float(np.median(tf)), float(np.median(ts))
    return SpeedupResult(t_full, t_scr, t_full / t_scr, gap, gap <= 1e-5, scr, full)


@dataclass
class AuditReport:
    """Certificate and violation counts per rule branch."""

    certificates: dict
    violations: dict
    points: int
    ns_exceeds_nf: int = 0
    first_violation: tuple = None
    ratios: list = field(default_factory=list, repr=False)

    def safe(self, branches=("zero_endpoint", "zero_interior", "fuse_endpoint")):
        return all(self.violations[b] == 0 for b in branches)

    def merge(self, other):
        for b in BRANCHES:
            self.certificates[b] += other.certificates[b]
            self.violations[b] += other.violations[b]
        self.points += other.points
        self.ns_exceeds_nf += other.ns_exceeds_nf
        self.first_violation = self.first_violation or other.first_violation
        self.ratios.extend(other.ratios)
        return self


def _empty_audit():
    return AuditReport({b: 0 for b in BRANCHES}, {b: 0 for b in BRANCHES}, 0)


def _audit_track(problem, lambda2, ratios, cfg):
    tight = SolverConfig(max_iters=max(cfg.max_iters, 100000), rel_tol=1e-12)
    use_oracle = problem.p <= MAX_ENUM
    rep = _empty_audit()
    p = problem.p
    ends = np.zeros(p, dtype=bool)
    ends[[0, -1]] = True
    lmax = lambda1_max(problem, lambda2)
    ref_l1, u_ref = lmax, problem.y
    beta = np.zeros(p)
    for ratio in ratios:
        l1 = ratio * lmax
        lam = LambdaPair(l1, lambda2)
        if ratio >= 1.0:
            ref_l1, u_ref, beta = l1, problem.y, np.zeros(p)
            continue
        if use_oracle:
            beta = solve_exact_small(problem, lam).beta
            tz = np.abs(beta) <= ORACLE_TOL
            tf = np.abs(np.diff(beta)) <= ORACLE_TOL
        else:
            beta = solve(problem, lam, tight, warm=beta).beta
            tz, tf = zero_mask(beta), fused_mask(beta)
        ball = dual_ball(problem, lam, ref_l1, u_ref)
        r = screen(problem, lam, ball)
        lit = screen(problem, lam, ball, endpoint_rule="literal").fuse_endpoint_mask
        pair_end = np.zeros(p - 1, dtype=bool)
        pair_end[[0, -1]] = True
        checks = {
            "zero_endpoint": (r.zero_mask & ends, tz),
            "zero_interior": (r.zero_mask & ~ends, tz),
            "fuse_endpoint": (r.fuse_endpoint_mask, tf),
            "fuse_interior": (r.fuse_interior_mask & ~pair_end, tf),
            "fuse_endpoint_literal": (lit, tf),
        }
        for b, (cert, truth) in checks.items():
            rep.certificates[b] += int(cert.sum())
            bad = np.flatnonzero(cert & ~truth)
            rep.violations[b] += int(bad.size)
            if bad.size and rep.first_violation is None and b in ("zero_endpoint", "zero_interior",
                                                                    "fuse_endpoint"):
                rep.first_violation = (b, int(bad[0]), l1, lambda2)
        ns, nf = int(r.zero_mask.sum()), int(tz.sum())
        rep.ns_exceeds_nf += ns > nf
        rep.ratios.append((ratio, lambda2, ns / nf if nf else 1.0))
        rep.points += 1
        ref_l1, u_ref = l1, problem.y - problem.X @ beta
    return rep


def _audit_job(args):
    return _audit_track(*args)


def audit_safety(problem, grid, cfg=None, jobs=1):
    """Compare every certificate on the grid with ground truth.

    Ground truth is the enumeration oracle when ``p`` is small enough,
    otherwise a tight solve. The ball at each point is built from the
    ground-truth dual solution of the previous point. Counts are split by
    rule branch; ``fuse_interior`` and ``fuse_endpoint_literal`` are
    measured, not required to be zero.
    """
    cfg = cfg or SolverConfig()
    tasks = [(problem, l2, grid.ratio_values, cfg) for l2 in grid.lambda2_values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_audit_job, tasks))
    else:
        parts = [_audit_job(t) for t in tasks]
    total = _empty_audit()
    for part in parts:
        total.merge(part)
    return total
