"""Grid-based verification of the planar-graze ellipsoid characterization.

Each ``verify_*`` routine samples apexes on the outer body ``K``, builds the
grazes of the inner body ``L`` and measures how far the sampled curves are
from satisfying one step of the argument.  Results come back as
:class:`LemmaReport` objects whose ``per_apex`` entries keep every measured
defect so that failures can be traced to a witness apex.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bodies import BodyPair, as_direction, fibonacci_sphere, normalize, radial_point, tangent_basis
from .curves import (
    ClosedCurve,
    Line,
    affine_symmetry_defect,
    central_symmetry_defect,
    chords_parallel,
    concurrency_defect,
    fit_conic,
    fit_plane,
    homothety_check,
    intersect_line_plane,
    support_line_at,
)
from .errors import ApexError, GeometryError, InputError, NumericError
from .graze import _solve_on_graze, graze_tangent, line_misses_body, trace_graze, trace_omega

DEFAULT_THRESHOLDS = {
    "lemma": 1e-6,
    "planarity": 1e-6,
    "symmetry": 1e-6,
    "concurrency": 1e-5,
    "conic": 1e-7,
    "parallel": 1e-8,
    "almost_free": 0.0,
}

# defect name -> threshold key
_THRESHOLD_OF = {
    "planarity": "planarity",
    "symmetry": "symmetry",
    "omega_planarity": "planarity",
    "plane_parallel": "lemma",
    "homothety": "lemma",
    "lemma3": "lemma",
    "neg_min_margin": "almost_free",
    "c_on_axis": "lemma",
    "on_graze_y": "lemma",
    "chord_parallel": "lemma",
    "v_in_plane": "lemma",
    "support_concurrency": "concurrency",
    "chord_family": "concurrency",
    "affine_symmetry": "symmetry",
    "conic_residual": "conic",
    "normal_angle": "lemma",
    "plane_offset": "lemma",
}

TRACE_STEP = 2e-2


class InconclusiveError(GeometryError):
    pass


def worker_count():
    try:
        return max(1, int(os.environ.get("GRAZE_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class ApexGrid:
    directions: np.ndarray
    apexes: np.ndarray
    seed: int | None = None

    @classmethod
    def on(cls, outer, count=64, seed=42, include_axes=True, inner=None, exterior_margin=1e-6):
        """Fibonacci directions (rotated by ``seed``) mapped to boundary points of ``outer``."""
        if count < 8:
            raise InputError("apex grid needs at least 8 points")
        dirs = fibonacci_sphere(count, seed)
        if include_axes:
            dirs = np.vstack([dirs, np.eye(3), -np.eye(3)])
        # adding 0.0 turns the -0.0 components of the axis points into 0.0
        apexes = np.array([radial_point(outer, d) for d in dirs]) + 0.0
        grid = cls(dirs, apexes, seed)
        if inner is not None:
            grid.check_exterior(inner, exterior_margin)
        return grid

    def check_exterior(self, inner, exterior_margin=1e-6):
        for x in self.apexes:
            if not inner.gauge(x) > 1.0 + exterior_margin:
                raise ApexError(f"grid apex {x.tolist()} is not outside the inner body")

    def __len__(self):
        return len(self.apexes)


@dataclass
class LemmaReport:
    """Aggregate of one check over a set of apexes.

    ``worst_defect`` is the largest raw defect over all apexes; ``passed``
    requires every defect to be below its own threshold (see ``thresholds``)
    and every boolean check to hold.
    """

    lemma_id: str
    passed: bool
    worst_defect: float
    witness_apex: list
    per_apex: list
    thresholds: dict
    grid: dict = field(default_factory=dict)
    failed_on: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "lemma_id": self.lemma_id,
            "pass": self.passed,
            "worst_defect": self.worst_defect,
            "witness_apex": self.witness_apex,
            "per_apex": self.per_apex,
            "thresholds": self.thresholds,
            "grid": self.grid,
            "failed_on": self.failed_on,
            "notes": self.notes,
            "details": self.details,
        }


def _thresholds(overrides):
    th = dict(DEFAULT_THRESHOLDS)
    if overrides:
        unknown = set(overrides) - set(th)
        if unknown:
            raise InputError(f"unknown threshold(s): {sorted(unknown)}")
        th.update({k: float(v) for k, v in overrides.items()})
    return th


def _aggregate(lemma_id, rows, thresholds, grid=None, order=None, notes=(), details=None):
    """Fold per-apex rows ``(apex, defects, flags)`` into a report, in apex order."""
    failed, worst, witness, worst_ratio = [], -np.inf, None, -np.inf
    per_apex = []
    keys = order or []
    for apex, defects, flags in rows:
        per_apex.append({"apex": np.asarray(apex).tolist(), "defects": defects, **({"flags": flags} if flags else {})})
        for name, value in defects.items():
            if name not in _THRESHOLD_OF:
                continue
            if name not in keys:
                keys.append(name)
            thr = thresholds[_THRESHOLD_OF[name]]
            bad = not value < thr
            if bad and name not in failed:
                failed.append(name)
            ratio = value - thr if thr == 0 else value / thr
            if value > worst:
                worst = value
            if ratio > worst_ratio:
                worst_ratio, witness = ratio, apex
        for name, ok in (flags or {}).items():
            if ok is False and name not in failed:
                failed.append(name)
                if worst_ratio < np.inf:
                    witness = apex
                    worst_ratio = np.inf
    failed.sort(key=lambda n: keys.index(n) if n in keys else len(keys))
    return LemmaReport(
        lemma_id=lemma_id,
        passed=not failed,
        worst_defect=float(worst),
        witness_apex=None if witness is None else np.asarray(witness).tolist(),
        per_apex=per_apex,
        thresholds=thresholds,
        grid=grid or {},
        failed_on=failed,
        notes=list(notes),
        details=details or {},
    )


def _grid_info(grid):
    return {"count": len(grid), "seed": grid.seed}


def _graze_plane(inner, x, step):
    graze = trace_graze(inner, x, step, max_step=step)
    return graze, fit_plane(graze.points)


def verify_lemma1(pair: BodyPair, grid: ApexGrid, thresholds=None, step=TRACE_STEP) -> LemmaReport:
    """Central symmetry of each graze about the point where the line through ``x`` and ``-x`` meets its plane."""
    th = _thresholds(thresholds)

    def one(x):
        graze, plane = _graze_plane(pair.inner, x, step)
        # symmetry is still measured on a non-planar graze (about the
        # best-fit plane's O_x); failed_on lists planarity first
        center = intersect_line_plane(x, -x, plane)
        sym = central_symmetry_defect(graze.points, center)
        return x, {"planarity": plane.rms_residual, "symmetry": sym.defect}, None

    rows = _map(one, grid.apexes)
    return _aggregate("lemma1", rows, th, _grid_info(grid), order=["planarity", "symmetry"])


def verify_lemma2(pair: BodyPair, grid: ApexGrid, thresholds=None, step=TRACE_STEP) -> LemmaReport:
    """Planarity of the opposite-cone intersection, parallelism with the graze, homothety from ``x``."""
    th = _thresholds(thresholds)

    def one(x):
        graze, plane = _graze_plane(pair.inner, x, step)
        omega = trace_omega(pair.inner, x, graze)
        oplane = fit_plane(omega.points)
        sin = float(np.linalg.norm(np.cross(plane.normal, oplane.normal)))
        homo = homothety_check(graze.points, omega.points, x)
        defects = {"omega_planarity": oplane.rms_residual, "plane_parallel": sin, "homothety": homo.defect,
                   "ratio": homo.ratio}
        return x, defects, None

    rows = _map(one, grid.apexes)
    return _aggregate("lemma2", rows, th, _grid_info(grid), order=["omega_planarity", "plane_parallel", "homothety"])


@dataclass
class Lemma3Result:
    v: np.ndarray
    defect: float
    normals: np.ndarray
    apexes: np.ndarray
    degenerate: bool = False

    def __iter__(self):
        return iter((self.v, self.defect))


def ring_apexes(outer, u, count):
    """Boundary points of ``outer`` on the great circle ``u``-perp."""
    e1, e2 = tangent_basis(u)
    phi = 2 * np.pi * np.arange(count) / count
    dirs = normalize(np.outer(np.cos(phi), e1) + np.outer(np.sin(phi), e2))
    return np.array([radial_point(outer, d) for d in dirs])


def verify_lemma3(pair: BodyPair, u, ring_count=12, step=TRACE_STEP) -> Lemma3Result:
    """Common direction ``v(u)`` parallel to every graze plane for apexes in ``u``-perp.

    ``v`` is the smallest principal direction of the plane normals, polished
    by a minimax refinement; ``defect = max |<n_x, v>|``.
    """
    u = as_direction(u, tol=1e-9)
    if ring_count < 8:
        raise InputError("ring_count must be at least 8")
    apexes = ring_apexes(pair.outer, u, ring_count)
    normals = np.array(_map(lambda x: _graze_plane(pair.inner, x, step)[1].normal, apexes))
    w, V = np.linalg.eigh(normals.T @ normals)
    v = V[:, 0]
    degenerate = w[1] <= 1e-12 * w[2]
    defect = float(np.max(np.abs(normals @ v)))
    if not degenerate and defect > 1e-14:
        v, defect = _minimax_polish(normals, v, defect)
    if v @ u < 0:
        v = -v
    return Lemma3Result(v, defect, normals, apexes, bool(degenerate))


def lemma3_report(pair: BodyPair, directions, ring_count=12, thresholds=None, step=TRACE_STEP) -> LemmaReport:
    """:func:`verify_lemma3` over several directions ``u``.

    ``per_apex`` entries are keyed by ``u`` (stored under ``apex``) and carry
    the fitted ``v``.
    """
    th = _thresholds(thresholds)
    rows, vs = [], []
    for u in np.atleast_2d(np.asarray(directions, dtype=float)):
        res = verify_lemma3(pair, u, ring_count, step)
        rows.append((normalize(u), {"lemma3": res.defect}, {"rank_ok": not res.degenerate}))
        vs.append(res.v.tolist())
    report = _aggregate("lemma3", rows, th, {"count": len(rows), "seed": None, "ring_count": ring_count})
    for entry, v in zip(report.per_apex, vs):
        entry["v"] = v
    return report


def _minimax_polish(normals, v, defect):
    from scipy.optimize import minimize

    e1, e2 = tangent_basis(v)

    def cost(ab):
        w = normalize(v + ab[0] * e1 + ab[1] * e2)
        return float(np.max(np.abs(normals @ w)))

    scale = max(defect, 1e-12)
    res = minimize(cost, [0.0, 0.0], method="Nelder-Mead",
                   options={"xatol": 1e-3 * scale, "fatol": 1e-3 * scale, "initial_simplex": [[0, 0], [scale, 0], [0, scale]]})
    if res.fun < defect:
        return normalize(v + res.x[0] * e1 + res.x[1] * e2), float(res.fun)
    return v, defect


def check_almost_free(pair: BodyPair, grid: ApexGrid, ring_count=12, thresholds=None, step=TRACE_STEP) -> LemmaReport:
    """For each apex ``z``: do the lines from ``z`` to the boundary points of ``K`` in the
    central plane parallel to its graze plane all miss ``L``?"""
    th = _thresholds(thresholds)
    if ring_count < 8:
        raise InputError("ring_count must be at least 8")

    def one(z):
        _, plane = _graze_plane(pair.inner, z, step)
        try:
            ring = ring_apexes(pair.outer, plane.normal, ring_count)
        except NumericError as exc:
            raise GeometryError(f"sampling the central section failed at z={z.tolist()}: {exc}") from exc
        margins = [line_misses_body(pair.inner, z, w).margin for w in ring if np.linalg.norm(w - z) > 1e-9]
        m = float(min(margins))
        return z, {"neg_min_margin": -m, "min_margin": m}, None

    rows = _map(one, grid.apexes)
    report = _aggregate("almost_free", rows, th, _grid_info(grid))
    report.details["min_margin"] = min(r[1]["min_margin"] for r in rows)
    return report


def _tangent_contacts(inner, x, graze, d):
    """Contact normals of the two support planes of ``L`` that contain the line ``x + t d``."""
    g = graze.normals @ d
    idx = [k for k in range(len(g)) if g[k] == 0 or g[k] * g[(k + 1) % len(g)] < 0]
    if len(idx) != 2:
        raise GeometryError(f"expected two tangent planes through the line, found {len(idx)}")
    tol = 1e-14 * max(1.0, float(np.linalg.norm(x)))
    out = []
    for k in idx:
        k1 = (k + 1) % len(g)
        u0 = normalize(graze.normals[k] * abs(g[k1]) + graze.normals[k1] * abs(g[k]))
        out.append(_solve_on_graze(inner, x, u0, lambda w, p, H: (float(w @ d), d), tol))
    return out


def _exact_support(inner, x, graze, point, level_dir):
    """Tangent line of the graze at the point near ``point`` with the same ``level_dir`` height."""
    k = int(np.argmin(np.linalg.norm(graze.points - point, axis=1)))
    level = float(point @ level_dir)
    tol = 1e-14 * max(1.0, float(np.linalg.norm(x)))
    w = _solve_on_graze(inner, x, graze.normals[k], lambda u, p, H: (float(p @ level_dir) - level, H @ level_dir), tol)
    return Line(inner.grad(w), graze_tangent(inner, x, w))


def verify_theorem_construction(pair: BodyPair, x_dir, u, y_count=16, ring_count=12, thresholds=None,
                                step=TRACE_STEP, chord_count=32) -> LemmaReport:
    """Support-line construction showing ``u``-perp meets the graze plane in an affine symmetry axis.

    For each admissible ``y`` on the boundary of the central section ``u``-perp of
    ``K``: the two support planes of ``L`` through the line ``xy`` touch at
    ``a, b``; the support lines of the graze at ``a`` and ``b`` must pass
    through ``c = xy & graze plane``, which must lie on the axis, and the
    chord ``ab`` must be parallel to ``v(u)``.  The graze is then tested for
    affine symmetry about the axis along ``v(u)`` and fitted with a conic.
    """
    th = _thresholds(thresholds)
    x_dir = as_direction(x_dir, tol=1e-9)
    u = as_direction(u, tol=1e-9)
    if abs(x_dir @ u) > 1e-9:
        raise InputError("u must be orthogonal to x_dir")
    L, K = pair.inner, pair.outer
    x = radial_point(K, x_dir)
    graze, plane = _graze_plane(L, x, step)
    notes = []
    planar = plane.rms_residual < th["planarity"]
    pts = graze.points if planar else plane.project(graze.points)
    if not planar:
        notes.append("graze is not planar; downstream checks use its projection onto the best-fit plane")
    curve = ClosedCurve(pts)
    diam = curve.diameter

    axis_dir = np.cross(u, plane.normal)
    if np.linalg.norm(axis_dir) < 1e-9:
        raise GeometryError("graze plane is parallel to u-perp; no axis")
    axis_point, *_ = np.linalg.lstsq(np.vstack([u, plane.normal]), [0.0, plane.offset], rcond=None)
    axis = Line(axis_point, normalize(axis_dir))

    lem3 = verify_lemma3(pair, u, ring_count, step)
    v_in = normalize(lem3.v - (lem3.v @ plane.normal) * plane.normal)
    v_in_plane = float(abs(lem3.v @ plane.normal))

    e1 = x_dir
    e2 = np.cross(u, x_dir)
    rows, tangencies, skipped = [], [], 0
    for k in range(y_count):
        phi = 2 * np.pi * (k + 0.5) / y_count
        y = radial_point(K, normalize(np.cos(phi) * e1 + np.sin(phi) * e2))
        if np.linalg.norm(y - x) < 1e-9 * diam or not line_misses_body(L, x, y):
            skipped += 1
            continue
        d = y - x
        w1, w2 = _tangent_contacts(L, x, graze, d)
        a, b = L.grad(w1), L.grad(w2)
        graze_y = trace_graze(L, y, step, max_step=step)
        curve_y = ClosedCurve(graze_y.points)
        on_y = float(max(curve_y.distance([a, b])) / curve_y.diameter)
        c = intersect_line_plane(x, y, plane)
        if planar:
            a_in, b_in = a, b
            L1, L2 = Line(a, graze_tangent(L, x, w1)), Line(b, graze_tangent(L, x, w2))
        else:
            a_in, b_in = plane.project(np.array([a, b]))
            L1, L2 = support_line_at(pts, a_in), support_line_at(pts, b_in)
        chord = normalize(b_in - a_in)
        tangencies.append({"y": y.tolist(), "a": a.tolist(), "b": b.tolist(), "c": c.tolist(),
                           "support_a": L1.direction.tolist(), "support_b": L2.direction.tolist()})
        rows.append((y, {
            "on_graze_y": on_y,
            "c_on_axis": axis.distance(c) / diam,
            "support_concurrency": max(L1.distance(c), L2.distance(c)) / diam,
            "chord_parallel": float(np.linalg.norm(np.cross(chord, v_in))),
        }, None))
    if len(rows) < 3:
        raise InconclusiveError(f"only {len(rows)} admissible y (need 3)")

    family = 0.0
    level_dir = np.cross(plane.normal, v_in)
    for A, B in chords_parallel(pts, v_in, count=chord_count, planarity_tol=np.inf, parallel_tol=1e-6):
        if planar:
            la, lb = (_exact_support(L, x, graze, P, level_dir) for P in (A, B))
        else:
            la, lb = support_line_at(pts, A), support_line_at(pts, B)
        family = max(family, concurrency_defect([la, lb, axis]).defect)
    aff = affine_symmetry_defect(pts, axis, v_in)
    conic = fit_conic(graze.points)

    summary = {
        "planarity": plane.rms_residual,
        "v_in_plane": v_in_plane,
        "lemma3": lem3.defect,
        "chord_family": family,
        "affine_symmetry": aff.defect,
        "conic_residual": conic.residual,
    }
    report = _aggregate("theorem_construction", [(x, summary, {"is_ellipse": conic.is_ellipse})] + rows, th,
                        order=["planarity", "lemma3", "v_in_plane", "support_concurrency", "c_on_axis",
                               "chord_parallel", "on_graze_y", "chord_family", "affine_symmetry", "conic_residual"],
                        notes=notes)
    report.details = {
        "apex": x.tolist(),
        "u": u.tolist(),
        "v": lem3.v.tolist(),
        "axis": {"point": axis.point.tolist(), "direction": axis.direction.tolist()},
        "feasible_y": len(rows),
        "skipped_y": skipped,
        "is_ellipse": conic.is_ellipse,
        "conic": conic.coefficients.tolist(),
        "tangencies": tangencies,
    }
    return report


CERTIFICATE_NOTE = (
    "Every sampled graze is planar and is an ellipse within tolerance. That grazes from every point "
    "of a surrounding body being ellipses forces L to be an ellipsoid is a known characterization "
    "theorem, applied here as a black box; it is not re-proved by this check."
)


def certify_ellipsoid(pair: BodyPair, grid: ApexGrid, thresholds=None, step=TRACE_STEP) -> LemmaReport:
    """Planarity and conic fit of every graze on the grid."""
    th = _thresholds(thresholds)

    def one(x):
        graze, plane = _graze_plane(pair.inner, x, step)
        conic = fit_conic(graze.points)
        return x, {"planarity": plane.rms_residual, "conic_residual": conic.residual}, {"is_ellipse": conic.is_ellipse}

    rows = _map(one, grid.apexes)
    report = _aggregate("ellipse_cert", rows, th, _grid_info(grid), order=["planarity", "conic_residual"])
    report.notes.append(CERTIFICATE_NOTE if report.passed else
                        "Certificate refused: at least one graze is not a planar ellipse (see witness_apex).")
    return report


def verify_ball_remark(pair: BodyPair, grid: ApexGrid, thresholds=None, step=TRACE_STEP) -> LemmaReport:
    """For a ball ``K``: the opposite-cone intersection lies in ``x``-perp."""
    if pair.outer.kind != "ball":
        raise InputError("the ball remark needs an outer body of kind 'ball'")
    th = _thresholds(thresholds)

    def one(x):
        graze = trace_graze(pair.inner, x, step, max_step=step)
        omega = trace_omega(pair.inner, x, graze)
        oplane = fit_plane(omega.points)
        xh = normalize(x)
        angle = math.atan2(float(np.linalg.norm(np.cross(oplane.normal, xh))), abs(float(oplane.normal @ xh)))
        return x, {
            "omega_planarity": oplane.rms_residual,
            "normal_angle": angle,
            "plane_offset": abs(oplane.offset) / oplane.diameter,
        }, None

    rows = _map(one, grid.apexes)
    return _aggregate("ball_remark", rows, th, _grid_info(grid))
