"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 screening safety
violation.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import datagen
from .bench import SafetyViolation, audit_safety, path_rejection_ratios, speedup
from .io import DataError, read_dense_csv, read_sparse_labeled, write_dense_csv, write_results
from .path import PathGrid, ScreeningViolation, solve_path
from .problem import LambdaPair, kkt_violation, make_problem
from .screening import dual_ball, lambda1_max, screen
from .solver import SolverConfig, solve

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SAFETY = 0, 1, 2, 3
SPARSE_SUFFIXES = (".svm", ".libsvm", ".txt", ".sparse")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _data_flags(sp):
    g = sp.add_argument_group("data")
    g.add_argument("--input", help="dense CSV (last column is y) or sparse 'label idx:val' file")
    g.add_argument("--dims", type=int, help="feature count for sparse input")
    g.add_argument("--n", type=int, default=50, help="rows to simulate when --input is absent")
    g.add_argument("--p", type=int, default=1000, help="features to simulate")
    g.add_argument("--cov", choices=("id", "ar1"), default="id")
    g.add_argument("--seed", type=int, default=0)


def _solver_flags(sp):
    sp.add_argument("--tol", type=float, default=1e-8, help="relative objective tolerance")
    sp.add_argument("--max-iters", type=int, default=20000)
    sp.add_argument("--method", choices=("apg", "admm"), default="apg")


def _grid_flags(sp):
    sp.add_argument("--lambda2-set", default="1e-4,1e-3,1e-2,1e-1,1,10")
    sp.add_argument("--ratio-grid", default="0.01:0.01:1", help="lo:step:hi of lambda1/lambda1_max")
    sp.add_argument("--fuse", choices=("off", "endpoint", "all"), default="endpoint")
    sp.add_argument("--jobs", type=int, default=1)


def _out_flags(sp):
    sp.add_argument("--out", help="output path; standard output if absent")
    sp.add_argument("--format", choices=("csv", "json"), help="defaults to the --out suffix, else json")


def build_parser():
    ap = _Parser(prog="fusedsafe", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="write a simulated data set as dense CSV")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--cov", choices=("id", "ar1"), default="id")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--noise-sd", type=float, default=0.1)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("solve", help="solve at one (lambda1, lambda2)")
    _data_flags(sp)
    sp.add_argument("--lambda1", type=float, required=True)
    sp.add_argument("--lambda2", type=float, required=True)
    _solver_flags(sp)
    _out_flags(sp)

    sp = sub.add_parser("screen", help="screen one point from the lambda1_max dual")
    _data_flags(sp)
    sp.add_argument("--lambda1", type=float, required=True)
    sp.add_argument("--lambda2", type=float, required=True)
    sp.add_argument("--fuse", choices=("off", "endpoint", "all"), default="endpoint")
    _out_flags(sp)

    for name, text in (("path", "solve the full grid"),
                       ("bench", "speedup and rejection ratios"),
                       ("audit", "check every certificate against tight solves")):
        sp = sub.add_parser(name, help=text)
        _data_flags(sp)
        _grid_flags(sp)
        _solver_flags(sp)
        _out_flags(sp)
        if name == "path":
            sp.add_argument("--no-screening", action="store_true")
            sp.add_argument("--audit", action="store_true",
                            help="verify certificates against tight solves; exit 3 on failure")
        if name == "bench":
            sp.add_argument("--repeats", type=int, default=3)
    return ap


def _load(args):
    if args.input:
        path = Path(args.input)
        if path.suffix.lower() in SPARSE_SUFFIXES:
            X, y = read_sparse_labeled(path, args.dims)
        else:
            X, y = read_dense_csv(path)
    else:
        X, y, _ = datagen.simulate(args.n, args.p, args.cov, args.seed)
    return make_problem(X, y)


def _cfg(args):
    if args.tol <= 0 or args.max_iters < 1:
        raise UsageError("--tol must be > 0 and --max-iters >= 1")
    return SolverConfig(max_iters=args.max_iters, rel_tol=args.tol)


def _grid(args):
    try:
        return PathGrid.from_strings(args.lambda2_set, args.ratio_grid)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _format(args):
    if args.format:
        return args.format
    if args.out and Path(args.out).suffix.lower() == ".csv":
        return "csv"
    return "json"


def _emit(args, doc, columns=None):
    """Write ``doc`` as JSON, or ``columns`` (header, rows) as CSV."""
    if _format(args) == "csv" and columns is not None:
        header, rows = columns
        lines = [",".join(header)]
        lines += [",".join(format(v, ".17g") if isinstance(v, float) else str(v) for v in r)
                  for r in rows]
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(doc, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _meta(args, problem):
    keys = ("input", "n", "p", "cov", "seed", "tol", "max_iters", "fuse", "method")
    meta = {k: getattr(args, k) for k in keys if hasattr(args, k)}
    if args.input:
        for k in ("n", "p", "cov", "seed"):
            meta.pop(k, None)
    meta["shape"] = [problem.n, problem.p]
    return meta


def _emit_records(args, records, meta, extra=None):
    doc = dict(meta)
    doc.update(extra or {})
    if args.out:
        write_results(args.out, records, doc)
        return
    rows = [r.record() for r in records]
    if _format(args) == "csv":
        header = list(rows[0]) if rows else []
        _emit(args, None, (header, [list(r.values()) for r in rows]))
    else:
        _emit(args, {"metadata": doc, "points": rows})


def cmd_simulate(args):
    X, y, _ = datagen.simulate(args.n, args.p, args.cov, args.seed, args.noise_sd)
    write_dense_csv(args.out, X, y)
    return EXIT_OK


def cmd_solve(args):
    problem = _load(args)
    lam = LambdaPair(args.lambda1, args.lambda2)
    res = solve(problem, lam, _cfg(args))
    doc = {
        "lambda1": lam.lambda1, "lambda2": lam.lambda2, "objective": res.objective,
        "status": res.status, "iterations": res.iterations,
        "kkt_violation": kkt_violation(problem, res, lam), "beta": res.beta.tolist(),
    }
    _emit(args, doc, (["index", "beta"], [(j, float(b)) for j, b in enumerate(res.beta)]))
    return EXIT_OK


def cmd_screen(args):
    problem = _load(args)
    lam = LambdaPair(args.lambda1, args.lambda2).require_positive()
    lmax = lambda1_max(problem, lam.lambda2)
    # at or above lambda1_max the dual solution is y itself
    ball = dual_ball(problem, lam, max(lmax, lam.lambda1), problem.y)
    rep = screen(problem, lam, ball)
    fuse = rep.fuse_mask(args.fuse)
    doc = {
        "lambda1": lam.lambda1, "lambda2": lam.lambda2, "lambda1_max": lmax,
        "zero_set": np.flatnonzero(rep.zero_mask).tolist(),
        "fuse_set": np.flatnonzero(fuse).tolist(),
        "fuse_interior_flagged": np.flatnonzero(rep.fuse_interior_mask).tolist(),
    }
    rows = [(j, int(rep.zero_mask[j]), int(j < problem.p - 1 and fuse[j]), float(rep.scores[j]))
            for j in range(problem.p)]
    _emit(args, doc, (["index", "zero", "fused_with_next", "score"], rows))
    return EXIT_OK


def cmd_path(args):
    problem = _load(args)
    grid = _grid(args)
    pts = solve_path(problem, grid, _cfg(args), use_screening=not args.no_screening,
                     fuse=args.fuse, audit=args.audit, keep=False, jobs=args.jobs,
                     method=args.method)
    _emit_records(args, pts, _meta(args, problem))
    return EXIT_OK


def cmd_bench(args):
    problem = _load(args)
    grid = _grid(args)
    res = speedup(problem, grid, _cfg(args), fuse=args.fuse, repeats=args.repeats,
                  method=args.method)
    ratios = path_rejection_ratios(res.screened, res.reference, args.fuse)
    summary = {
        "t_full": res.t_full, "t_screened": res.t_screened, "speedup": res.speedup,
        "valid": res.valid, "max_disagreement": res.max_disagreement,
        "rejection": [{"ratio": r, "lambda2": l2, "zero_only": a, "combined": b}
                      for r, l2, a, b in ratios],
    }
    print(f"speedup {res.speedup:.3f} (full {res.t_full:.3f}s, screened {res.t_screened:.3f}s, "
          f"valid={res.valid})", file=sys.stderr)
    _emit_records(args, res.screened, _meta(args, problem), {"bench": summary})
    return EXIT_OK


def cmd_audit(args):
    problem = _load(args)
    rep = audit_safety(problem, _grid(args), _cfg(args), jobs=args.jobs)
    doc = {
        "points": rep.points, "certificates": rep.certificates, "violations": rep.violations,
        "ns_exceeds_nf": rep.ns_exceeds_nf, "safe": rep.safe(),
        "first_violation": rep.first_violation,
    }
    rows = [(b, rep.certificates[b], rep.violations[b]) for b in rep.certificates]
    _emit(args, doc, (["branch", "certificates", "violations"], rows))
    if not rep.safe() or rep.ns_exceeds_nf:
        print(f"safety violation: {rep.first_violation}", file=sys.stderr)
        return EXIT_SAFETY
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "solve": cmd_solve, "screen": cmd_screen,
            "path": cmd_path, "bench": cmd_bench, "audit": cmd_audit}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"fusedsafe: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ScreeningViolation, SafetyViolation) as e:
        print(f"safety violation: {e}", file=sys.stderr)
        return EXIT_SAFETY
    except (DataError, ValueError, OSError) as e:
        print(f"fusedsafe: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
