"""Sequential solution paths over a decreasing lambda1 grid per lambda2.

Each track starts at ``lambda1_max(lambda2)``, where the solution is 0 and
the dual solution is ``y``. Every later point builds the dual ball from the
point just before it, screens, solves the reduced problem warm-started from
the previous solution, and hands its own dual solution to the next point.
"""
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .problem import LambdaPair, fused_mask, zero_mask
from .screening import (
    build_reduction,
    dual_ball,
    expand_solution,
    lambda1_max,
    reduce_vector,
    screen,
)
from .solver import SolverConfig, solve, solve_reduced

DEFAULT_LAMBDA2 = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)


class ScreeningViolation(RuntimeError):
    """A certificate disagreed with a tight reference solve."""

    def __init__(self, j, lambda1, lambda2, branch):
        self.j, self.lambda1, self.lambda2, self.branch = j, lambda1, lambda2, branch
        super().__init__(f"{branch} certificate for index {j} is wrong at "
                         f"lambda1={lambda1:.17g}, lambda2={lambda2:.17g}")


def parse_ratio_grid(spec):
    """``"lo:step:hi"`` to a strictly decreasing tuple of ratios."""
    try:
        lo, step, hi = (float(t) for t in spec.split(":"))
    except ValueError:
        raise ValueError(f"ratio grid must look like lo:step:hi, got {spec!r}") from None
    if not (0 < lo <= hi and step > 0):
        raise ValueError(f"invalid ratio grid {spec!r}")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    vals = np.round(lo + step * np.arange(count), 12)
    return tuple(float(v) for v in vals[::-1])


def parse_lambda2_set(spec):
    try:
        vals = tuple(float(t) for t in spec.split(",") if t.strip())
    except ValueError:
        raise ValueError(f"lambda2 set must be comma-separated numbers, got {spec!r}") from None
    if not vals:
        raise ValueError("lambda2 set is empty")
    return vals


@dataclass(frozen=True)
class PathGrid:
    """``lambda2`` values and a strictly decreasing grid of ``lambda1 / lambda1_max``."""

    lambda2_values: tuple
    ratio_values: tuple

    def __post_init__(self):
        l2 = tuple(float(v) for v in self.lambda2_values)
        r = tuple(float(v) for v in self.ratio_values)
        if not l2 or not r:
            raise ValueError("grid must be nonempty")
        if any(not np.isfinite(v) or v <= 0 for v in l2):
            raise ValueError("lambda2 values must be positive")
        if r[0] > 1 or r[-1] <= 0:
            raise ValueError("ratios must lie in (0, 1]")
        if any(b >= a for a, b in zip(r, r[1:])):
            raise ValueError("ratios must be strictly decreasing")
        object.__setattr__(self, "lambda2_values", l2)
        object.__setattr__(self, "ratio_values", r)

    @classmethod
    def standard(cls, num=100):
        """Six lambda2 values times ratios ``1, 0.99, ..., 0.01``."""
        return cls(DEFAULT_LAMBDA2, parse_ratio_grid(f"{1 / num}:{1 / num}:1"))

    @classmethod
    def from_strings(cls, lambda2_set, ratio_grid):
        return cls(parse_lambda2_set(lambda2_set), parse_ratio_grid(ratio_grid))

    def __len__(self):
        return len(self.lambda2_values) * len(self.ratio_values)


@dataclass
class PathPoint:
    """One grid point. ``beta``, ``dual_u`` and ``report`` are not serialized."""

    lambda1: float
    lambda2: float
    ratio: float
    n_zero_screened: int
    n_fused: int
    n_actual_inactive: int
    solve_ms: float
    screen_ms: float
    iterations: int
    n_actual_fused: int = 0
    beta: np.ndarray = field(default=None, repr=False)
    dual_u: np.ndarray = field(default=None, repr=False)
    report: object = field(default=None, repr=False)

    RECORD_FIELDS = ("lambda1", "lambda2", "ratio", "n_zero_screened", "n_fused",
                     "n_actual_inactive", "solve_ms", "screen_ms", "iterations")

    def record(self):
        return {k: getattr(self, k) for k in self.RECORD_FIELDS}


def _check_point(problem, report, fuse, beta_ref, lam):
    zt = zero_mask(beta_ref)
    bad = np.flatnonzero(report.zero_mask & ~zt)
    if bad.size:
        j = int(bad[0])
        branch = "zero_endpoint" if j in (0, problem.p - 1) else "zero_interior"
        raise ScreeningViolation(j, lam.lambda1, lam.lambda2, branch)
    if fuse != "off":
        ft = fused_mask(beta_ref)
        bad = np.flatnonzero(report.fuse_mask(fuse) & ~ft)
        if bad.size:
            j = int(bad[0])
            branch = "fuse_endpoint" if report.fuse_endpoint_mask[j] else "fuse_interior"
            raise ScreeningViolation(j, lam.lambda1, lam.lambda2, branch)


def solve_track(problem, lambda2, ratios, cfg=None, use_screening=True, fuse="endpoint",
                audit=False, keep=True, method="apg"):
    """Solve one ``lambda2`` track; returns a list of :class:`PathPoint`."""
    cfg = cfg or SolverConfig()
    audit_cfg = SolverConfig(max_iters=max(cfg.max_iters, 100000), rel_tol=1e-12)
    y = problem.y
    p = problem.p
    lmax = lambda1_max(problem, lambda2)
    ref_l1, u_ref = lmax, y
    beta = np.zeros(p)
    points = []
    for ratio in ratios:
        l1 = ratio * lmax
        lam = LambdaPair(l1, lambda2)
        report = None
        if ratio >= 1.0:
            # at lambda1_max the solution is known: beta = 0, u = y
            beta = np.zeros(p)
            u = y.copy()
            n_zero, n_fused, iters, t_screen, t_solve = p, 0, 0, 0.0, 0.0
        elif use_screening:
            t0 = time.perf_counter()
            ball = dual_ball(problem, lam, ref_l1, u_ref)
            report = screen(problem, lam, ball)
            rp = build_reduction(problem, report, fuse)
            t1 = time.perf_counter()
            res = solve_reduced(rp, lam, cfg, warm=reduce_vector(rp, beta), method=method)
            beta = expand_solution(rp, res.beta)
            u = res.dual_u
            t2 = time.perf_counter()
            n_zero = int(report.zero_mask.sum())
            n_fused = int(report.fuse_mask(fuse).sum())
            iters, t_screen, t_solve = res.iterations, t1 - t0, t2 - t1
        else:
            t1 = time.perf_counter()
            res = solve(problem, lam, cfg, warm=beta)
            beta = res.beta
            u = res.dual_u
            t2 = time.perf_counter()
            n_zero, n_fused, iters, t_screen, t_solve = 0, 0, res.iterations, 0.0, t2 - t1
        if audit and report is not None:
            ref = solve(problem, lam, audit_cfg, warm=beta)
            _check_point(problem, report, fuse, ref.beta, lam)
        points.append(PathPoint(
            lambda1=l1, lambda2=float(lambda2), ratio=float(ratio),
            n_zero_screened=n_zero, n_fused=n_fused,
            n_actual_inactive=int(zero_mask(beta).sum()),
            n_actual_fused=int(fused_mask(beta).sum()),
            solve_ms=1e3 * t_solve, screen_ms=1e3 * t_screen, iterations=int(iters),
            beta=beta.copy() if keep else None, dual_u=u.copy() if keep else None,
            report=report if keep else None,
        ))
        ref_l1, u_ref = l1, u
    return points


def _track_job(args):
    return solve_track(*args[:3], **args[3])


def solve_path(problem, grid, cfg=None, use_screening=True, fuse="endpoint", audit=False,
               keep=True, jobs=1, method="apg"):
    """Solve every grid point, one sequential track per ``lambda2``.

    Parameters
    ----------
    problem : Problem
    grid : PathGrid
    cfg : SolverConfig, optional
    use_screening : bool
        Off gives the baseline: full solves with the same warm starts.
    fuse : {"off", "endpoint", "all"}
    audit : bool
        Check every certificate against a tight full solve and raise
        :class:`ScreeningViolation` on the first wrong one.
    jobs : int
        Worker processes across ``lambda2`` tracks.

    Returns
    -------
    list of PathPoint
        Ordered by ``lambda2`` then decreasing ratio.
    """
    cfg = cfg or SolverConfig()
    kw = dict(use_screening=use_screening, fuse=fuse, audit=audit, keep=keep, method=method)
    tasks = [(problem, l2, grid.ratio_values, dict(cfg=cfg, **kw)) for l2 in grid.lambda2_values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            tracks = list(ex.map(_track_job, tasks))
    else:
        tracks = [_track_job(t) for t in tasks]
    return [pt for tr in tracks for pt in tr]
