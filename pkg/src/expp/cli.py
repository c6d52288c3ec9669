"""Command-line entry point: ``expp {solve,project,check,landscape,enumerate}``.

Exit codes: 0 on success, 1 when a ``check`` suite has failures, 2 on
invalid input, 3 when the solver does not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import checks, cm_sets, objectives, oracle, penalties, solver
from .hull_projections import DykstraConfig, DykstraError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3

INPUT_ERRORS = (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError)


class UsageError(Exception):
    """Invalid input; reported on stderr with exit code 2."""


def _read_json(arg):
    """Parse ``arg`` as inline JSON, a file path, or the name of a bundled instance."""
    text = arg.strip()
    if text[:1] in "[{":
        return json.loads(text)
    path = Path(arg)
    if not path.exists():
        bundled = resources.files("expp") / "data" / path.name
        if bundled.is_file():
            return json.loads(bundled.read_text())
    with open(path) as fh:
        return json.load(fh)


def _load_instance(arg):
    obj = _read_json(arg)
    stem = Path(arg).stem if arg.strip()[:1] not in "[{" else "instance"
    return objectives.instance_from_json(obj, default_id=stem)


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- solve -----------------------------------------------------------------------

def _configs(args, inst):
    """Schedule and solver config from ``--config`` plus flag overrides."""
    conf = _read_json(args.config) if args.config else {}
    if not isinstance(conf, dict):
        raise UsageError("config must be a JSON object")
    base = solver.default_schedule(inst.problem, inst.spec)
    lam0 = args.lambda0 if args.lambda0 is not None else conf.get("lambda0", base.lambda0)
    lam_max = args.lambda_max if args.lambda_max is not None else conf.get("lambda_max")
    if lam_max is None:
        lam_max = max(base.lambda_max, lam0)
    sched = solver.HomotopySchedule(
        lambda0=float(lam0),
        gamma=float(args.gamma if args.gamma is not None else conf.get("gamma", base.gamma)),
        lambda_max=float(lam_max),
        warm_start_convex=bool(conf.get("warm_start_convex", False)),
    )
    rule = None
    if "step_rule" in conf:
        sr = conf["step_rule"]
        rule = solver.StepRule(solver.StepKind(sr.get("kind", "FixedLipschitz")), sr.get("c"))
    dyk = conf.get("dykstra", {})
    scfg = solver.SolverConfig(
        step_rule=rule,
        max_iters_per_stage=int(conf.get("max_iters_per_stage", 500)),
        stage_tol=float(conf.get("stage_tol", 1e-9)),
        feas_tol=float(args.tol if args.tol is not None else conf.get("feas_tol", 1e-8)),
        dykstra=DykstraConfig(int(dyk.get("max_iter", 5000)), float(dyk.get("tol", 1e-10))),
    )
    return sched, scfg


def run_report(inst, best_seed, res, wall_time):
    spec = inst.spec
    return {
        "id": inst.id,
        "seed": best_seed,
        "hull_point": cm_sets.point_to_json(spec, res.hull_point),
        "rounded": cm_sets.point_to_json(spec, res.rounded),
        "f_hull": res.f_hull,
        "f_rounded": res.f_rounded,
        "feas_residual": res.feas_residual,
        "exact_flag": res.exact_flag,
        "converged": res.converged,
        "rounded_feasible": cm_sets.contains(spec, res.rounded),
        "stage_trace": [{"lambda": s.lam, "iterations": s.iterations, "value": s.value}
                        for s in res.stage_trace],
        "wall_time": wall_time,
    }


def cmd_solve(args):
    inst = _load_instance(args.instance)
    sched, scfg = _configs(args, inst)
    if args.starts < 1:
        raise UsageError("--starts must be at least 1")
    seeds = range(args.seed, args.seed + args.starts)
    t0 = time.perf_counter()
    try:
        best_seed, res = solver.multistart_solve(inst.problem, inst.spec, sched, scfg, seeds)
    except (DykstraError, solver.SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    report = run_report(inst, best_seed, res, time.perf_counter() - t0)
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


# -- project ---------------------------------------------------------------------

def cmd_project(args):
    spec = cm_sets.spec_from_json(_read_json(args.set))
    x = cm_sets.point_from_json(spec, _read_json(args.point))
    try:
        p = cm_sets.project_hull(spec, x, DykstraConfig(max_iter=args.max_iter))
    except DykstraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    out = {
        "set": cm_sets.spec_to_json(spec),
        "projected": cm_sets.point_to_json(spec, p),
        "input_violation": cm_sets.hull_violation(spec, x),
        "output_violation": cm_sets.hull_violation(spec, p),
        "moved": float(np.linalg.norm(cm_sets.to_real(spec, x) - cm_sets.to_real(spec, p))),
    }
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return EXIT_OK


# -- check -----------------------------------------------------------------------

def cmd_check(args):
    suite = checks.SUITES[args.suite]
    kwargs = {"seed": args.seed}
    if args.trials is not None:
        if args.trials < 1:
            raise UsageError("--trials must be at least 1")
        kwargs["trials"] = args.trials
    results = suite(**kwargs)
    _emit(checks.format_table(results) + "\n", args.out)
    return EXIT_OK if checks.all_passed(results) else EXIT_CHECK_FAILED


# -- landscape ---------------------------------------------------------------------

def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def landscape_rows(prob, spec, lambdas, axes, lo, hi, points, base):
    """Rows ``(coords..., lambda, F)`` of ``f - lam ||x||^2`` over a grid slice of the real view.

    Raises
    ------
    UsageError
        If any grid point lies outside the hull.
    """
    shape = cm_sets.real_shape(spec)
    size = math.prod(shape)
    if base.size != size:
        raise UsageError(f"--base needs {size} values")
    if any(not 0 <= a < size for a in axes) or len(set(axes)) != len(axes):
        raise UsageError(f"axes must be distinct indices in [0, {size})")
    t = np.linspace(lo, hi, points)
    grids = np.meshgrid(*([t] * len(axes)), indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    pts = []
    for c in coords:
        v = base.copy()
        v[list(axes)] = c
        v = v.reshape(shape)
        if not cm_sets.hull_contains(spec, cm_sets.from_real(spec, v)):
            raise UsageError(f"slice point {c.tolist()} lies outside the hull")
        pts.append(v)
    rows = []
    for lam in lambdas:
        cfg = penalties.PenaltyConfig(penalties.PenaltyKind.NEG_SQUARE, lam)
        for c, v in zip(coords, pts):
            rows.append([*c.tolist(), lam, penalties.penalized_value(prob, spec, cfg, v)])
    return rows


def cmd_landscape(args):
    inst = _load_instance(args.instance)
    axes = [int(a) for a in _floats(args.axes)]
    if len(axes) not in (1, 2):
        raise UsageError("--axes takes one or two coordinates")
    lo, hi = _floats(args.range)
    size = math.prod(cm_sets.real_shape(inst.spec))
    base = np.array(_floats(args.base) if args.base else np.zeros(size), dtype=float)
    rows = landscape_rows(inst.problem, inst.spec, _floats(args.lambdas), axes, lo, hi,
                          args.points, base)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"coord{i + 1}" for i in range(len(axes))] + ["lambda", "F"])
    writer.writerows([repr(float(v)) for v in row] for row in rows)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# -- enumerate -----------------------------------------------------------------------

def cmd_enumerate(args):
    spec = cm_sets.spec_from_json(_read_json(args.set))
    try:
        members = oracle.enumerate_set(spec, oracle.EnumerationBudget(args.max_points))
    except (oracle.InfiniteSetError, oracle.BudgetExceeded) as exc:
        raise UsageError(str(exc)) from None
    out = {"set": cm_sets.spec_to_json(spec), "size": len(members),
           "members": [cm_sets.point_to_json(spec, v) for v in members]}
    _emit(json.dumps(out) + "\n", args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="expp", description="Constant-modulus optimization by extreme point pursuit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="homotopy solve of a JSON instance")
    p.add_argument("instance", help="instance JSON path (or name of a bundled instance)")
    p.add_argument("--config", help="JSON file or inline object with schedule/solver settings")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=1, help="number of seeds, starting at --seed")
    p.add_argument("--tol", type=float, help="feasibility tolerance")
    p.add_argument("--lambda0", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--lambda-max", dest="lambda_max", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("project", help="project a point onto the hull of a set")
    p.add_argument("set", help="set JSON (inline or path)")
    p.add_argument("point", help="point JSON (inline or path)")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=5000,
                   help="Dykstra round budget")
    p.add_argument("--out")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("check", help="run a verification suite")
    p.add_argument("suite", choices=sorted(checks.SUITES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("landscape", help="CSV of f - lam ||x||^2 over a 1-D or 2-D slice")
    p.add_argument("instance")
    p.add_argument("--lambdas", default="0,1,5")
    p.add_argument("--axes", default="0", help="one or two real-view coordinates")
    p.add_argument("--range", default="-1,1", help="lo,hi for every axis")
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--base", help="real-view point holding the other coordinates (default 0)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("enumerate", help="list the members of a finite set")
    p.add_argument("set")
    p.add_argument("--max-points", dest="max_points", type=int, default=10**6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_enumerate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, *INPUT_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
