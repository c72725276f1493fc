"""Command-line harness: ``solve``, ``spread`` and ``suite``.

Exit codes for ``solve``: 0 converged (residual or step rule), 1 bad input,
2 singular derivative or injectivity clipping failure, 3 iteration cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import classify_rate, estimate_spread
from .errors import ManifoldError
from .manifolds import make_manifold
from .newton import NewtonConfig, Termination, newton_solve
from .problems import builtin_problems, load_problem_file, problem_names

log = logging.getLogger("riemann_newton")

TRACE_COLUMNS = [
    "k",
    "residual_norm",
    "step_norm",
    "dist_to_solution",
    "ratio_q",
    "quad_quotient",
    "inverse_norm_estimate",
]

EXIT_OK, EXIT_INPUT, EXIT_FAILED, EXIT_MAX_ITER = 0, 1, 2, 3

_EXIT_FOR = {
    Termination.RESIDUAL: EXIT_OK,
    Termination.STEP: EXIT_OK,
    Termination.SINGULAR: EXIT_FAILED,
    Termination.INJECTIVITY_CLIP_FAIL: EXIT_FAILED,
    Termination.MAX_ITER: EXIT_MAX_ITER,
}


@dataclass
class RunConfig:
    problem: str = None
    problem_file: str = None
    newton: NewtonConfig = NewtonConfig()
    out_dir: Path = Path(".")
    fmt: str = "csv"
    seed: int = 0
    verbosity: int = 0


def fmt_float(x):
    """17 significant digits, locale independent."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv(rows, columns):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt_float(row[c]) if isinstance(row[c], (int, float, np.number)) else row[c] for c in columns])
    return buf.getvalue()


def dump_json(obj):
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


# -- problem selection -------------------------------------------------------


def select_problems(cfg):
    if cfg.problem_file:
        problems = load_problem_file(cfg.problem_file)
    else:
        problems = builtin_problems()
    if cfg.problem is None:
        return problems
    chosen = [p for p in problems if p.name == cfg.problem]
    if not chosen:
        raise KeyError(cfg.problem)
    return chosen


def select_start(spec, start):
    if start in (None, "default"):
        if not spec.starts:
            raise ValueError(f"problem {spec.name} has no starting points")
        return 0, spec.starts[0]
    try:
        idx = int(start)
    except ValueError:
        raise ValueError(f"--start must be 'default' or an index, got {start!r}") from None
    if not 0 <= idx < len(spec.starts):
        raise ValueError(f"problem {spec.name} has {len(spec.starts)} starts; index {idx} out of range")
    return idx, spec.starts[idx]


def run_start(spec, start, newton_cfg):
    trace = newton_solve(spec.field, start.point, newton_cfg, spec.known_solution)
    return trace, classify_rate(trace)


def report_dict(spec, start_index, start, trace, rate, newton_cfg):
    last = trace.records[-1]
    return {
        "problem": spec.name,
        "manifold": spec.manifold.name,
        "start_index": start_index,
        "start_point": start.point,
        "expected_classification": start.expect,
        "termination": trace.termination.value,
        "message": trace.message,
        "iterations": trace.iterations,
        "final_point": last.point,
        "final_residual": last.residual_norm,
        "known_solution": spec.known_solution,
        "distances_are_proxy": trace.proxy_distances,
        "rate": rate.to_dict(),
        "config": asdict(newton_cfg),
    }


# -- commands ----------------------------------------------------------------


def cmd_solve(cfg, start="default"):
    try:
        problems = select_problems(cfg)
    except KeyError:
        print(f"error: unknown problem {cfg.problem!r}; available: {', '.join(problem_names())}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if len(problems) != 1:
        print(f"error: expected one problem, found {len(problems)}; use --problem", file=sys.stderr)
        return EXIT_INPUT
    spec = problems[0]
    try:
        idx, st = select_start(spec, start)
        trace, rate = run_start(spec, st, cfg.newton)
    except (ValueError, ManifoldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out = Path(cfg.out_dir)
    rows = trace.rows()
    if cfg.fmt == "json":
        atomic_write(out / f"{spec.name}_trace.json", dump_json(rows))
    else:
        atomic_write(out / f"{spec.name}_trace.csv", rows_to_csv(rows, TRACE_COLUMNS))
    atomic_write(out / f"{spec.name}_report.json", dump_json(report_dict(spec, idx, st, trace, rate, cfg.newton)))

    print(
        f"{spec.name}: {trace.termination.value} after {trace.iterations} iterations, "
        f"residual {fmt_float(trace.records[-1].residual_norm)}, rate {rate.classification}"
    )
    if cfg.verbosity:
        for r in rows:
            print("  " + "  ".join(f"{c}={fmt_float(r[c])}" for c in TRACE_COLUMNS))
    return _EXIT_FOR[trace.termination]


def default_base_point(manifold):
    kind = type(manifold).__name__
    if kind == "Sphere":
        return np.eye(manifold.n)[-1]
    if kind == "Hyperboloid":
        return np.eye(manifold.n + 1)[0]
    if kind == "SPD":
        return np.eye(manifold.n)
    return np.zeros(manifold.point_shape)


def cmd_spread(cfg, kind, dim, radius, samples, point=None):
    try:
        m = make_manifold(kind, dim)
        p = default_base_point(m) if point is None else m.project(np.asarray(json.loads(point), dtype=float))
        m.check_point(p)
        est = estimate_spread(m, p, radius, samples, cfg.seed)
    except (ValueError, ManifoldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    payload = dict(est.to_dict(), manifold=m.name, kind=kind, dim=dim)
    stem = Path(cfg.out_dir) / f"spread_{kind}{dim}"
    if cfg.fmt == "json":
        atomic_write(stem.with_suffix(".json"), dump_json(payload))
    else:
        cols = ["kind", "dim", "radius", "samples", "seed", "pairs_evaluated", "estimate"]
        atomic_write(stem.with_suffix(".csv"), rows_to_csv([payload], cols))
    print(fmt_float(est.estimate))
    return EXIT_OK


SUITE_COLUMNS = ["problem", "start", "termination", "iterations", "classification", "expected", "match"]


def _suite_row(spec, idx, start, newton_cfg):
    try:
        trace, rate = run_start(spec, start, newton_cfg)
        termination, iterations, cls = trace.termination.value, trace.iterations, rate.classification
    except ManifoldError as exc:
        log.warning("%s start %d failed: %s", spec.name, idx, exc)
        termination, iterations, cls = "error", -1, "inconclusive"
    match = start.expect is None or start.expect == cls
    return {
        "problem": spec.name,
        "start": idx,
        "termination": termination,
        "iterations": iterations,
        "classification": cls,
        "expected": start.expect or "",
        "match": "yes" if match else "no",
    }


def cmd_suite(cfg, workers=1):
    try:
        problems = select_problems(cfg)
    except KeyError:
        print(f"error: unknown problem {cfg.problem!r}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    jobs = [(spec, i, st) for spec in problems for i, st in enumerate(spec.starts)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda j: _suite_row(*j, cfg.newton), jobs))
    else:
        rows = [_suite_row(*j, cfg.newton) for j in jobs]

    stem = Path(cfg.out_dir) / "suite_summary"
    if cfg.fmt == "json":
        atomic_write(stem.with_suffix(".json"), dump_json(rows))
    else:
        atomic_write(stem.with_suffix(".csv"), rows_to_csv(rows, SUITE_COLUMNS))

    widths = {c: max([len(c)] + [len(str(r[c])) for r in rows]) for c in SUITE_COLUMNS}
    print("  ".join(c.ljust(widths[c]) for c in SUITE_COLUMNS))
    for r in rows:
        print("  ".join(str(r[c]).ljust(widths[c]) for c in SUITE_COLUMNS))
    failures = sum(r["match"] == "no" for r in rows)
    print(f"{len(rows)} runs, {failures} classification mismatches")
    return EXIT_OK if failures == 0 else EXIT_INPUT


# -- argument parsing --------------------------------------------------------


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError("must be positive")
        return value

    return parse


def _common(p):
    p.add_argument("--out-dir", default=".", type=Path, help="directory for output files")
    p.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("-v", "--verbose", action="count", default=0)


def _newton_flags(p):
    p.add_argument("--problem", help="problem name (built-in or from --problem-file)")
    p.add_argument("--problem-file", help="JSON problem file (one object or a list)")
    p.add_argument("--max-iters", type=_positive(int))
    p.add_argument("--tol-residual", type=_positive(float))
    p.add_argument("--tol-step", type=_positive(float))


def build_parser():
    parser = argparse.ArgumentParser(prog="riemann-newton", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run Newton's method on one problem")
    solve.add_argument("name", nargs="?", help="problem name (same as --problem)")
    _newton_flags(solve)
    solve.add_argument("--start", default="default", help="'default' or index of the starting point")
    _common(solve)

    spread = sub.add_parser("spread", help="estimate the geodesic spread constant K_p")
    spread.add_argument("kind", choices=["euclidean", "sphere", "spd", "hyperboloid"])
    spread.add_argument("--dim", type=_positive(int), default=3)
    spread.add_argument("--radius", type=float, default=1.0)
    spread.add_argument("--samples", type=int, default=1000)
    spread.add_argument("--point", help="base point as a JSON array (default: canonical point)")
    _common(spread)

    suite = sub.add_parser("suite", help="run every (problem, start) pair and check classifications")
    _newton_flags(suite)
    suite.add_argument("--workers", type=_positive(int), default=1)
    _common(suite)
    return parser


def _newton_config(args):
    overrides = {}
    if args.max_iters is not None:
        overrides["max_iterations"] = args.max_iters
    if args.tol_residual is not None:
        overrides["residual_tol"] = args.tol_residual
    if args.tol_step is not None:
        overrides["step_tol"] = args.tol_step
    return replace(NewtonConfig(), **overrides)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.WARNING, format="%(message)s")
    cfg = RunConfig(out_dir=args.out_dir, fmt=args.fmt, seed=args.seed, verbosity=args.verbose)
    if args.command == "spread":
        return cmd_spread(cfg, args.kind, args.dim, args.radius, args.samples, args.point)

    name = args.problem
    if args.command == "solve":
        if args.name and args.problem and args.name != args.problem:
            print("error: conflicting problem names", file=sys.stderr)
            return EXIT_INPUT
        name = args.name or args.problem
        if name is None and not args.problem_file:
            print("error: give a problem name or --problem-file", file=sys.stderr)
            return EXIT_INPUT
    cfg = replace(cfg, problem=name, problem_file=args.problem_file, newton=_newton_config(args))
    if args.command == "solve":
        return cmd_solve(cfg, args.start)
    return cmd_suite(cfg, args.workers)


if __name__ == "__main__":
    sys.exit(main())
