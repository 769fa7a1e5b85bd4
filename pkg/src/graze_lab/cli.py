"""``graze-lab`` command line.

Exit codes: 0 pass, 1 verification failed (a report is still written),
2 bad input or usage, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import harness
from .bodies import BodyPair, SupportBody, fibonacci_sphere, load_body, validate_body
from .curves import fit_plane, intersect_line_plane
from .errors import InputError, NumericError
from .graze import trace_graze, trace_omega
from .io import write_graze_csv, write_json, write_omega_csv
from .search import OBJECTIVE_SAMPLES, ShapeParams, search_counterexample
from .svg import emit_svg, theorem_figure

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class RunConfig:
    body_k: Path | None
    body_l: Path | None
    apex_count: int = 64
    ring_count: int = 12
    thresholds: dict = field(default_factory=dict)
    seed: int = 42
    out_dir: Path = Path("graze-lab-out")

    def __post_init__(self):
        if self.apex_count < 8:
            raise InputError("--apex-count must be at least 8")
        if self.ring_count < 8:
            raise InputError("--ring-count must be at least 8")
        for name, v in self.thresholds.items():
            if not v > 0:
                raise InputError(f"threshold {name} must be positive")

    def inner(self):
        if self.body_l is None:
            raise InputError("--body-l is required")
        return load_body(self.body_l)

    def outer(self, inner=None):
        if self.body_k is not None:
            return load_body(self.body_k)
        if inner is None:
            raise InputError("--body-k is required")
        # default: a ball three times the inner body's circumradius
        return SupportBody.ball(3.0 * inner.extent[1], tag="default-outer")

    def pair(self):
        L = self.inner()
        pair = BodyPair(self.outer(L), L)
        pair.check_containment()
        return pair

    def grid(self, pair):
        return harness.ApexGrid.on(pair.outer, self.apex_count, seed=self.seed, inner=pair.inner)

    def output(self, name):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name


def _vector(text):
    try:
        v = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    if v.shape != (3,):
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return v


def _direction(text):
    v = _vector(text)
    n = np.linalg.norm(v)
    if n == 0:
        raise argparse.ArgumentTypeError("direction must be non-zero")
    return v / n


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--body-k", type=Path, help="outer body JSON (apexes live on its boundary)")
    common.add_argument("--body-l", type=Path, help="inner body JSON")
    common.add_argument("--apex-count", type=int, default=64)
    common.add_argument("--ring-count", type=int, default=12)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", type=Path, default=Path("graze-lab-out"), help="output directory")
    common.add_argument("--svg", type=Path, help="also write a figure here")
    common.add_argument("--step", type=float, help="continuation step in radians (default 0.02)")

    p = argparse.ArgumentParser(prog="graze-lab", description="Numerical checks on grazes of convex bodies.",
                                epilog="Thresholds: --tol-<name> VALUE for name in "
                                       + ", ".join(n.replace("_", "-") for n in harness.DEFAULT_THRESHOLDS))
    sub = p.add_subparsers(dest="command", required=True)

    body = sub.add_parser("body").add_subparsers(dest="action", required=True)
    body.add_parser("validate", parents=[common])

    for name in ("graze", "omega"):
        act = sub.add_parser(name).add_subparsers(dest="action", required=True)
        t = act.add_parser("trace", parents=[common])
        t.add_argument("--apex", type=_vector, required=True)

    verify = sub.add_parser("verify").add_subparsers(dest="action", required=True)
    for name in ("lemma1", "lemma2", "almost-free", "ball-remark"):
        verify.add_parser(name, parents=[common])
    l3 = verify.add_parser("lemma3", parents=[common])
    l3.add_argument("--u", type=_direction, action="append", help="direction u (repeatable)")
    l3.add_argument("--direction-count", type=int, default=16)
    th = verify.add_parser("theorem", parents=[common])
    th.add_argument("--x-dir", type=_direction, default=np.array([1.0, 0.0, 0.0]))
    th.add_argument("--u", type=_direction, default=np.array([0.0, 0.0, 1.0]))
    th.add_argument("--y-count", type=int, default=16)

    sub.add_parser("certify", parents=[common])

    s = sub.add_parser("search", parents=[common])
    s.add_argument("--budget", type=int, default=500)
    s.add_argument("--floor", type=float, default=0.0)
    s.add_argument("--search-apexes", type=int, default=8)
    s.add_argument("--search-samples", type=int, default=OBJECTIVE_SAMPLES, help="graze samples per apex")
    return p


def _split_tolerances(parser, extra):
    """Pull ``--tol-<name> VALUE`` pairs out of the unparsed arguments."""
    tols = {}
    it = iter(extra)
    for arg in it:
        if not arg.startswith("--tol-"):
            parser.error(f"unrecognized argument {arg}")
        name, _, value = arg[len("--tol-"):].partition("=")
        if not value:
            value = next(it, None)
            if value is None:
                parser.error(f"{arg} needs a value")
        name = name.replace("-", "_")
        if name not in harness.DEFAULT_THRESHOLDS:
            parser.error(f"unknown tolerance {arg}")
        try:
            tols[name] = float(value)
        except ValueError:
            parser.error(f"{arg}: not a number: {value}")
    return tols


def _report(cfg, report, figure=None, svg=None):
    path = cfg.output(f"report_{report.lemma_id}.json")
    write_json(path, report.to_dict())
    if svg is not None and figure is not None:
        svg.parent.mkdir(parents=True, exist_ok=True)
        svg.write_text(figure())
    status = "PASS" if report.passed else "FAIL"
    extra = "" if report.passed else f" failed_on={','.join(report.failed_on)} witness={report.witness_apex}"
    print(f"{report.lemma_id}: {status} worst_defect={report.worst_defect:.3e}{extra} ({path})")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _witness(report):
    return np.array(report.witness_apex if report.witness_apex is not None else report.per_apex[0]["apex"])


def _graze_figure(pair, x, step, title):
    graze = trace_graze(pair.inner, x, step, max_step=step)
    plane = fit_plane(graze.points)
    marks = []
    try:
        marks.append(("O_x", intersect_line_plane(x, -x, plane)))
    except NumericError:
        pass
    return emit_svg([("graze", graze.points)], points=marks, title=title)


def _omega_figure(pair, x, step, title):
    graze = trace_graze(pair.inner, x, step, max_step=step)
    omega = trace_omega(pair.inner, x, graze)
    return emit_svg([("graze", graze.points), ("omega", omega.points)], title=title)


def _run(args, cfg):
    cmd, action = args.command, getattr(args, "action", None)
    if cmd == "body":
        L = cfg.inner() if cfg.body_l is not None else None
        bodies = {"L": L} if L is not None else {}
        if cfg.body_k is not None:
            bodies["K"] = load_body(cfg.body_k)
        if not bodies:
            raise InputError("give --body-l and/or --body-k")
        ok = True
        out = {}
        for name, b in bodies.items():
            rep = validate_body(b)
            out[name] = rep.to_dict()
            ok &= rep.passed
            print(f"{name} ({b.tag}): {'valid' if rep.passed else 'INVALID'} convexity_margin={rep.convexity_margin:.4g}"
                  + ("" if rep.passed else f" [{'; '.join(rep.failures)}]"))
        if ok and "L" in bodies and "K" in bodies:
            out["containment_gap"] = BodyPair(bodies["K"], bodies["L"]).check_containment()
        write_json(cfg.output("validation.json"), out)
        return EXIT_PASS if ok else EXIT_FAIL

    if cmd in ("graze", "omega"):
        L = cfg.inner()
        step = args.step or harness.TRACE_STEP
        graze = trace_graze(L, args.apex, step, max_step=step)
        write_graze_csv(cfg.output("graze.csv"), graze)
        curves = [("graze", graze.points)]
        msg = f"graze: {len(graze)} samples"
        if cmd == "omega":
            omega = trace_omega(L, args.apex, graze)
            write_omega_csv(cfg.output("omega.csv"), omega)
            curves.append(("omega", omega.points))
            msg += f", omega: {len(omega)} samples"
        plane = fit_plane(graze.points)
        msg += f", planarity residual {plane.rms_residual:.3e} -> {cfg.out_dir}"
        if args.svg is not None:
            marks = []
            try:
                marks.append(("O_x", intersect_line_plane(args.apex, -args.apex, plane)))
            except NumericError:
                pass
            args.svg.parent.mkdir(parents=True, exist_ok=True)
            args.svg.write_text(emit_svg(curves, points=marks, title=f"{cmd} from {args.apex.tolist()}"))
        print(msg)
        return EXIT_PASS

    if cmd == "search":
        L = cfg.inner()
        K = cfg.outer(L)
        if L.kind == "ball":
            raise InputError("search needs an ellipsoid or perturbed ellipsoid start body")
        start = ShapeParams.from_terms(L.matrix, [(l, m, c) for l, m, c in L.harmonics])
        trace = search_counterexample(K, start, args.budget, cfg.seed, floor=args.floor, apex_count=args.search_apexes,
                                      samples=args.search_samples)
        trace.write(cfg.output("search_trace.jsonl"))
        summary = {
            "best_objective": trace.best_objective,
            "initial_ellipsoid_distance": trace.initial_ellipsoid_distance,
            "ellipsoid_distance": trace.ellipsoid_distance,
            "converged": trace.converged,
            "evaluations": len(trace.iterations),
            "seed": trace.seed,
            "best": trace.best.to_dict(),
        }
        write_json(cfg.output("search_summary.json"), summary)
        print(f"search: best objective {trace.best_objective:.3e}, ellipsoid distance "
              f"{trace.initial_ellipsoid_distance:.3e} -> {trace.ellipsoid_distance:.3e}, "
              f"{len(trace.iterations)} evaluations, converged={trace.converged}")
        return EXIT_PASS

    pair = cfg.pair()
    th, step = cfg.thresholds, args.step or harness.TRACE_STEP
    if cmd == "certify":
        rep = harness.certify_ellipsoid(pair, cfg.grid(pair), th, step)
        return _report(cfg, rep, lambda: _graze_figure(pair, _witness(rep), step, "certify: witness graze"), args.svg)
    if action == "lemma1":
        rep = harness.verify_lemma1(pair, cfg.grid(pair), th, step)
        return _report(cfg, rep, lambda: _graze_figure(pair, _witness(rep), step, "lemma1: witness graze"), args.svg)
    if action == "lemma2":
        rep = harness.verify_lemma2(pair, cfg.grid(pair), th, step)
        return _report(cfg, rep, lambda: _omega_figure(pair, _witness(rep), step, "lemma2: graze and omega"), args.svg)
    if action == "ball-remark":
        if pair.outer.kind != "ball":
            raise InputError("the ball remark needs an outer body of kind 'ball'")
        rep = harness.verify_ball_remark(pair, cfg.grid(pair), th, step)
        return _report(cfg, rep, lambda: _omega_figure(pair, _witness(rep), step, "ball remark: omega"), args.svg)
    if action == "almost-free":
        rep = harness.check_almost_free(pair, cfg.grid(pair), cfg.ring_count, th, step)
        return _report(cfg, rep, None, None)
    if action == "lemma3":
        dirs = np.array(args.u) if args.u else fibonacci_sphere(args.direction_count, cfg.seed)
        rep = harness.lemma3_report(pair, dirs, cfg.ring_count, th, step)
        return _report(cfg, rep, None, None)
    if action == "theorem":
        rep = harness.verify_theorem_construction(pair, args.x_dir, args.u, args.y_count, cfg.ring_count, th, step)

        def fig():
            g = trace_graze(pair.inner, np.array(rep.details["apex"]), step, max_step=step)
            return theorem_figure(rep, g.points)

        return _report(cfg, rep, fig, args.svg)
    raise InputError(f"unknown command {cmd} {action}")


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        tols = _split_tolerances(parser, extra)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    try:
        cfg = RunConfig(args.body_k, args.body_l, args.apex_count, args.ring_count, tols, args.seed, args.out)
        return _run(args, cfg)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run_command())
