"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import time

import numpy as np
import pytest

from conftest import A411
from graze_lab.bodies import BodyPair, SupportBody, fibonacci_sphere, validate_body
from graze_lab.curves import diameter, fit_plane, hausdorff, homothety_check, intersect_line_plane
from graze_lab.graze import trace_graze, trace_omega
from graze_lab.harness import (
    ApexGrid,
    certify_ellipsoid,
    check_almost_free,
    lemma3_report,
    verify_lemma1,
    verify_theorem_construction,
)
from graze_lab.search import ShapeParams, search_counterexample
from oracles import circle, random_rotation

STEP = 0.02
# worst certify planarity for the perturbed fixture, 64 Fibonacci + 6 axis apexes on K = ball(6)
CERTIFY_REGRESSION = 0.017847183578873407


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, summary):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {summary}")
        assert ok, summary
    return emit


def _trace(body, x):
    return trace_graze(body, x, STEP, max_step=STEP)


def _ellipsoid_pair():
    return BodyPair(SupportBody.ball(6.0), SupportBody.ellipsoid(A411))


def test_criterion_1_ball_graze(verdict):
    t0 = time.perf_counter()
    L, x = SupportBody.ball(1.0), np.array([2.0, 0, 0])
    g = _trace(L, x)
    dist = hausdorff(g.points, circle([0.5, 0, 0], [1, 0, 0], np.sqrt(3) / 2, 2000))
    O_x = intersect_line_plane(x, -x, fit_plane(g.points))
    pair = BodyPair(SupportBody.ball(2.0), L)
    rep = verify_lemma1(pair, ApexGrid(np.array([[1.0, 0, 0]]), x[None], None))
    elapsed = time.perf_counter() - t0
    lemma = max(rep.per_apex[0]["defects"].values())
    ok = dist < 1e-8 and np.linalg.norm(O_x - [0.5, 0, 0]) < 1e-8 and lemma < 1e-8 and elapsed < 1.0
    verdict(1, ok, f"hausdorff={dist:.2e} O_x={np.round(O_x, 12).tolist()} lemma1={lemma:.2e} t={elapsed:.2f}s")


def test_criterion_2_omega(verdict):
    t0 = time.perf_counter()
    L, x = SupportBody.ball(1.0), np.array([2.0, 0, 0])
    g = _trace(L, x)
    om = trace_omega(L, x, g)
    dist = hausdorff(om.points, circle([0, 0, 0], [1, 0, 0], 2 / np.sqrt(3), 2000))
    hom = homothety_check(g.points, om.points, x)
    elapsed = time.perf_counter() - t0
    ok = dist < 1e-7 and abs(hom.ratio - 4 / 3) < 1e-7 and elapsed < 1.0
    verdict(2, ok, f"hausdorff={dist:.2e} ratio={hom.ratio:.12f} defect={hom.defect:.2e} t={elapsed:.2f}s")


def test_criterion_3_polar_plane(verdict):
    t0 = time.perf_counter()
    pair = _ellipsoid_pair()
    Ainv = np.linalg.inv(A411)
    polar = planar = 0.0
    grid = ApexGrid.on(pair.outer, 64, include_axes=False)
    for x in grid.apexes:
        p = _trace(pair.inner, x).points
        polar = max(polar, np.abs(p @ (Ainv @ x) - 1).max())
        planar = max(planar, fit_plane(p).rms_residual)
    elapsed = time.perf_counter() - t0
    ok = polar < 1e-8 and planar < 1e-8 and elapsed < 30
    verdict(3, ok, f"{len(grid)} apexes: polar={polar:.2e} planarity={planar:.2e} t={elapsed:.1f}s")


def test_criterion_4_lemma3(verdict):
    dirs = fibonacci_sphere(16, 42)
    rep = lemma3_report(_ellipsoid_pair(), dirs)
    angle = defect = 0.0
    for u, e in zip(dirs, rep.per_apex):
        v, w = np.array(e["v"]), A411 @ u
        angle = max(angle, np.arctan2(np.linalg.norm(np.cross(v, w)), v @ w))
        defect = max(defect, e["defects"]["lemma3"])
    ok = angle < 1e-5 and defect < 1e-6
    verdict(4, ok, f"16 directions: max angle={angle:.2e} rad, max defect={defect:.2e}")


THEOREM_CASES = [
    ([1, 0, 0], [0, 0, 1]),
    ([0, 1, 0], [1, 0, 0]),
    ([1, 2, 0], [0, 0, 1]),
    ([1, 1, 1], [1, -1, 0]),
    ([2, -1, 1], [1, 2, 0]),
]


def test_criterion_5_theorem(verdict):
    pair = _ellipsoid_pair()
    worst = {"support_concurrency": 0.0, "c_on_axis": 0.0, "affine_symmetry": 0.0, "conic_residual": 0.0}
    tested, ellipse = 0, True
    for xd, u in THEOREM_CASES:
        xd, u = np.array(xd, float), np.array(u, float)
        rep = verify_theorem_construction(pair, xd / np.linalg.norm(xd), u / np.linalg.norm(u))
        if rep.details["feasible_y"] < 8:
            continue
        tested += 1
        ellipse &= rep.details["is_ellipse"]
        for e in rep.per_apex:
            for name in worst:
                if name in e["defects"]:
                    worst[name] = max(worst[name], e["defects"][name])
    ok = (tested >= 3 and ellipse and worst["support_concurrency"] < 1e-5 and worst["c_on_axis"] < 1e-6
          and worst["affine_symmetry"] < 1e-6 and worst["conic_residual"] < 1e-7)
    verdict(5, ok, f"{tested} (x,u) pairs, is_ellipse={ellipse}, " + " ".join(f"{k}={v:.2e}" for k, v in worst.items()))


def test_criterion_6_falsifiability(verdict, perturbed):
    valid = validate_body(perturbed).passed
    pair = BodyPair(SupportBody.ball(6.0), perturbed)
    rep = certify_ellipsoid(pair, ApexGrid.on(pair.outer, 64))
    planar = max(e["defects"]["planarity"] for e in rep.per_apex)
    ok = (valid and not rep.passed and planar > 1e-3
          and planar == pytest.approx(CERTIFY_REGRESSION, rel=1e-6))
    verdict(6, ok, f"validate_body={valid}, certify pass={rep.passed}, planarity={planar:.6g} "
                   f"(fixture {CERTIFY_REGRESSION:.6g}), witness={rep.witness_apex}")


def test_criterion_7_almost_free(verdict):
    L = SupportBody.ball(1.0)
    good = check_almost_free(BodyPair(SupportBody.ball(4.0), L), ApexGrid.on(SupportBody.ball(4.0), 64))
    bad = check_almost_free(BodyPair(SupportBody.ball(1.2), L), ApexGrid.on(SupportBody.ball(1.2), 64))
    margin = good.details["min_margin"]
    ok = good.passed and abs(margin - (4 / np.sqrt(2) - 1)) < 1e-3 and not bad.passed
    verdict(7, ok, f"ball4/ball1 margin={margin:.6f} pass={good.passed}; ball1.2/ball1 pass={bad.passed}")


def test_criterion_8_invariance(verdict, perturbed):
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = {"scaling": 0.0, "rotation": 0.0, "antipodal": 0.0}
    for k in range(100):
        Q = random_rotation(rng)
        E = SupportBody.ellipsoid(Q @ np.diag(rng.uniform(1, 4, 3)) @ Q.T)
        body = perturbed if k % 2 else E
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        x = d * rng.uniform(2.5, 6) * body.h(d)
        lam = float(np.exp(rng.uniform(np.log(0.1), np.log(10))))
        g = _trace(body, x)
        # scaling: pointwise, relative
        gs = _trace(body.scaled(lam), lam * x)
        s = np.abs(gs.points - lam * g.points).max() / (lam * np.abs(g.points).max()) if len(gs) == len(g) else np.inf
        worst["scaling"] = max(worst["scaling"], s)
        # rotation: as point sets, relative to diameter
        R = random_rotation(rng)
        xe = d * rng.uniform(2.5, 6) * E.h(d)
        ge = _trace(E, xe)
        gr = _trace(E.rotated(R), R @ xe)
        worst["rotation"] = max(worst["rotation"], hausdorff(ge.points @ R.T, gr.points) / diameter(ge.points))
        # antipodal: the trace from -x is the sample-by-sample negation, stronger than set equality
        gn = _trace(body, -x)
        if len(gn) == len(g):
            a = np.abs(gn.points + g.points).max()
        else:
            a = hausdorff(gn.points, -g.points)
        worst["antipodal"] = max(worst["antipodal"], a / diameter(g.points))
    elapsed = time.perf_counter() - t0
    ok = worst["scaling"] < 1e-8 and worst["rotation"] < 1e-8 and worst["antipodal"] < 1e-8 and elapsed < 60
    verdict(8, ok, "100 trials: " + " ".join(f"{k}={v:.2e}" for k, v in worst.items()) + f" t={elapsed:.1f}s")


def test_criterion_9_search(verdict):
    t0 = time.perf_counter()
    K = SupportBody.ball(6.0)
    start = ShapeParams.from_terms(A411, [(4, 0, 0.05)])
    first = search_counterexample(K, start, budget=500, seed=42)
    second = search_counterexample(K, start, budget=500, seed=42)
    same = list(first.lines()) == list(second.lines())
    elapsed = time.perf_counter() - t0
    best = [r["best_objective"] for r in first.iterations]
    monotone = all(b <= a for a, b in zip(best, best[1:]))
    ok = same and monotone and first.ellipsoid_distance < first.initial_ellipsoid_distance and elapsed < 600
    verdict(9, ok, f"identical traces={same}, best objective {best[0]:.3e} -> {first.best_objective:.3e}, "
                   f"ellipsoid distance {first.initial_ellipsoid_distance:.3e} -> {first.ellipsoid_distance:.3e}, "
                   f"t={elapsed:.0f}s for two runs")
