"""Command-line entry point.

Exit status 0 on success, 2 on validation failure, 3 when a search or flow
budget runs out. Failures print a JSON error object on stderr.
"""
from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

import numpy as np

from . import boundary, filling, gallery, invariants, moebius, rough, semimetric
from .errors import GeometryError, NotAntipodalWithinTol, SchemaMismatch
from .reports import dump_json, report_writer


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        err = {"error": "UsageError", "message": message, "details": {}}
        sys.stderr.write(json.dumps(err) + "\n")
        raise SystemExit(2)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from exc


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _load_antipodal(path) -> semimetric.AntipodalSpace:
    return semimetric.validate_antipodal(semimetric.read_space(path))


def _tau(args, z) -> moebius.TauVector:
    return moebius.TauVector(np.asarray(args.tau, dtype=float), z)


def _emit(obj, out=None):
    text = dump_json(obj, out)
    if out is None:
        sys.stdout.write(text)


def _csv(rows, schema, args):
    text = report_writer(rows, schema, args.out, flags=args.flag_string)
    if args.out is None:
        sys.stdout.write(text)


def cmd_validate(args):
    s = semimetric.read_space(args.space)
    report = {"n": s.n, "labels": list(s.labels), "diameter": s.diameter,
              "quasimetric_constant": semimetric.quasimetric_constant(s)}
    if not args.semimetric_only:
        z = semimetric.validate_antipodal(s)
        report["antipodes"] = {z.labels[i]: [z.labels[j] for j in z.antipodes(i)] for i in range(z.n)}
    report["valid"] = True
    _emit(report, args.out)


def cmd_cross_ratio(args):
    s = semimetric.read_space(args.space)
    pos = {lab: k for k, lab in enumerate(s.labels)}
    pts = args.points.split(",")
    if len(pts) != 4 or any(p not in pos for p in pts):
        raise SchemaMismatch(f"--points needs four labels of the space, got {args.points!r}")
    idx = [pos[p] for p in pts]
    _emit({"points": pts, "cross_ratio": semimetric.cross_ratio(s, *idx)}, args.out)


def cmd_discrepancy(args):
    z = _load_antipodal(args.space)
    t = _tau(args, z)
    d = moebius.discrepancy(t)
    _emit({"discrepancy": d, "argmax": [z.labels[j] for j in moebius.discrepancy_argmax(t)],
           "residual": float(np.abs(d).max())}, args.out)


def cmd_antipodalize(args):
    z = _load_antipodal(args.space)
    p = moebius.antipodalize(_tau(args, z), tol=args.tol, h=args.step)
    _emit({"tau_infinity": p.values, "residual": p.membership_residual,
           "distance_to_base": p.norm}, args.out)


def cmd_flow_trace(args):
    z = _load_antipodal(args.space)
    t = _tau(args, z)
    traj = moebius.flow_trajectory(t, h=args.step, T=args.horizon)
    final = moebius.antipodalize(t, tol=args.tol, h=args.step)
    dist = np.abs(traj.taus - final.values).max(axis=1)
    rows = [{"t": float(a), "residual": float(b), "distance_to_final": float(c)}
            for a, b, c in zip(traj.times, traj.discrepancy_norms, dist)]
    _csv(rows, ("t", "residual", "distance_to_final"), args)


def cmd_ball_sample(args):
    z = _load_antipodal(args.space)
    s = moebius.sample_ball(z, args.radius, args.count, args.seed)
    _emit(s.to_json(), args.out)


def cmd_distance(args):
    z = _load_antipodal(args.space)
    pts = []
    for v in (args.a, args.b):
        m = moebius.is_member(moebius.TauVector(np.asarray(v), z), args.tol)
        if not m:
            raise NotAntipodalWithinTol(f"point has discrepancy residual {m.residual:.3e}",
                                        rows=list(m.rows))
        pts.append(m)
    _emit({"distance": moebius.moebius_metric(*pts),
           "gromov_product": moebius.gromov_product(*pts)}, args.out)


def cmd_ai_dist(args):
    a, b = semimetric.read_space(args.a), semimetric.read_space(args.b)
    res = rough.ai_distance(a, b, args.mode, restarts=args.restarts, seed=args.seed)
    _emit(res.to_json(), args.out)


def _gram_source(path):
    data = json.loads(Path(path).read_text())
    if "gram" in data:
        return semimetric.validate_semimetric(data["gram"]) if len(data["gram"]) > 1 else data["gram"]
    return semimetric.validate_semimetric(data["rho"], data.get("labels"))


def cmd_gh_ball(args):
    res = rough.gh_ball_distance(_gram_source(args.a), _gram_source(args.b), args.mode,
                                 seed=args.seed, steps=args.steps)
    _emit(res.to_json(), args.out)


def cmd_fill_converge(args):
    z = _load_antipodal(args.space)
    rep = filling.filling_convergence_experiment(z, args.nets, args.radius, args.samples, args.seed)
    _csv(rep.rows, filling.FillingReport.COLUMNS, args)


def cmd_boundary_converge(args):
    z = _load_antipodal(args.space)
    rep = boundary.boundary_convergence_experiment(z, args.etas, args.radius, seed=args.seed,
                                                   extra_count=args.extra, eps_link=args.eps_link)
    _csv(rep.rows, boundary.BoundaryReport.COLUMNS, args)


def cmd_gallery(args):
    if args.kind in ("random", "perturb") and args.seed is None:
        raise SchemaMismatch(f"--seed is required for kind {args.kind}")
    if args.kind == "circle":
        z = gallery.circle_boundary(args.n, repair=not args.no_repair)
    elif args.kind == "tree":
        z = gallery.tree_boundary(args.branching, args.depth)
    elif args.kind == "random":
        z = gallery.random_antipodal(args.n, args.seed)
    else:
        if args.space is None or args.eta is None:
            raise SchemaMismatch("perturb needs --space and --eta")
        z = gallery.perturb_antipodal(_load_antipodal(args.space), args.eta, args.seed)
    if args.out is None:
        sys.stdout.write(json.dumps(z.to_json()) + "\n")
    else:
        semimetric.write_space(z, args.out)


def cmd_invariant_suite(args):
    results = invariants.run_invariant_suite(args.seed)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise GeometryError(f"{len(failed)} invariant checks failed", failed=failed)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="moebius-fill", description="Fillings of finite antipodal spaces.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text, space=True):
        sp = sub.add_parser(name, help=help_text)
        if space:
            sp.add_argument("space", help="JSON space file")
        sp.add_argument("--out", help="output path (stdout when omitted)")
        sp.set_defaults(func=func)
        return sp

    sp = add("validate", cmd_validate, "check a space file")
    sp.add_argument("--semimetric-only", action="store_true", help="skip the antipodal checks")

    sp = add("cross-ratio", cmd_cross_ratio, "cross-ratio of four labelled points")
    sp.add_argument("--points", required=True, help="four labels, comma separated")

    sp = add("discrepancy", cmd_discrepancy, "discrepancy of a tau vector")
    sp.add_argument("--tau", type=_floats, required=True)

    sp = add("antipodalize", cmd_antipodalize, "limit of the antipodal flow")
    sp.add_argument("--tau", type=_floats, required=True)
    sp.add_argument("--tol", type=_positive, default=moebius.MEMBER_TOL)
    sp.add_argument("--step", type=_positive, default=moebius.DEFAULT_STEP)

    sp = add("flow-trace", cmd_flow_trace, "CSV trace of the antipodal flow")
    sp.add_argument("--tau", type=_floats, required=True)
    sp.add_argument("--step", type=_positive, default=moebius.DEFAULT_STEP)
    sp.add_argument("--horizon", type=_positive, default=20.0)
    sp.add_argument("--tol", type=_positive, default=1e-10)

    sp = add("ball-sample", cmd_ball_sample, "sample a ball about the base point")
    sp.add_argument("--radius", type=_positive, required=True)
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)

    sp = add("distance", cmd_distance, "distance between two members")
    sp.add_argument("--a", type=_floats, required=True)
    sp.add_argument("--b", type=_floats, required=True)
    sp.add_argument("--tol", type=_positive, default=moebius.MEMBER_TOL)

    sp = add("ai-dist", cmd_ai_dist, "AI-distance between two spaces", space=False)
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--mode", choices=("exact", "heuristic"), default="exact")
    sp.add_argument("--restarts", type=int, default=32)
    sp.add_argument("--seed", type=int, required=True)

    sp = add("gh-ball", cmd_gh_ball, "GH distance between ball samples or spaces", space=False)
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--mode", choices=("exact", "heuristic"), default="heuristic")
    sp.add_argument("--steps", type=int, default=4000)
    sp.add_argument("--seed", type=int, required=True)

    sp = add("fill-converge", cmd_fill_converge, "filling convergence experiment", space=False)
    sp.add_argument("--space", required=True)
    sp.add_argument("--nets", type=_ints, required=True)
    sp.add_argument("--radius", type=_positive, default=3.0)
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--seed", type=int, required=True)

    sp = add("boundary-converge", cmd_boundary_converge, "boundary convergence experiment", space=False)
    sp.add_argument("--space", required=True)
    sp.add_argument("--etas", type=_floats, required=True)
    sp.add_argument("--radius", type=_positive, default=None)
    sp.add_argument("--extra", type=int, default=16, help="random sphere points beyond the rays")
    sp.add_argument("--eps-link", type=_positive, default=None)
    sp.add_argument("--seed", type=int, required=True)

    sp = add("gallery", cmd_gallery, "write a model space", space=False)
    sp.add_argument("--kind", choices=("circle", "tree", "random", "perturb"), required=True)
    sp.add_argument("--n", type=int, default=16)
    sp.add_argument("--no-repair", action="store_true", help="reject odd circles instead of repairing")
    sp.add_argument("--branching", type=int, default=2)
    sp.add_argument("--depth", type=int, default=3)
    sp.add_argument("--space", help="source space for perturb")
    sp.add_argument("--eta", type=float)
    sp.add_argument("--seed", type=int)

    sp = add("invariant-suite", cmd_invariant_suite, "run the invariant battery", space=False)
    sp.add_argument("--seed", type=int, required=True)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.flag_string = shlex.join(["moebius-fill", *argv])
    try:
        args.func(args)
    except GeometryError as exc:
        sys.stderr.write(json.dumps(exc.to_json(), default=str) + "\n")
        return exc.exit_status
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "details": {}}
        sys.stderr.write(json.dumps(err) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
