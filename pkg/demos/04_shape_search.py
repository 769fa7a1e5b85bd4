"""Looking for a non-ellipsoid whose grazes are all planar.

Starting from the perturbed body of demo 03, a Nelder-Mead search over the
14 even harmonic coefficients of degree 2 and 4 minimizes the worst graze
planarity over a fixed set of apexes.  Without a floor on the distance to
the ellipsoid family, the search drifts back toward an ellipsoid; with a
floor it has to stay away, and the best planarity it reaches stays
positive.

Run:  python3 demos/04_shape_search.py [budget]      (about 15 s per 100 evaluations)
"""

import sys
from pathlib import Path

import numpy as np

from graze_lab import SupportBody
from graze_lab.search import ShapeParams, search_counterexample

OUT = Path(__file__).parent / "out"
budget = int(sys.argv[1]) if len(sys.argv) > 1 else 200

outer = SupportBody.ball(6.0)
start = ShapeParams.from_terms(np.diag([4.0, 1.0, 1.0]), [(4, 0, 0.05)])
OUT.mkdir(exist_ok=True)

for floor in (0.0, 0.01):
    trace = search_counterexample(outer, start, budget=budget, seed=42, floor=floor)
    trace.write(OUT / f"search_floor_{floor:g}.jsonl")
    print(f"floor {floor:g}: objective {trace.iterations[0]['objective']:.3e} -> {trace.best_objective:.3e}, "
          f"ellipsoid distance {trace.initial_ellipsoid_distance:.3e} -> {trace.ellipsoid_distance:.3e}")
    big = sorted(zip(trace.best.coefficients, trace.best.indices), key=lambda t: -abs(t[0]))[:3]
    print("    largest coefficients:", ", ".join(f"(l={l},m={m}) {c:+.4f}" for c, (l, m) in big))
