"""A convex body that is not an ellipsoid fails the planarity checks.

Adding 0.05 times the zonal degree-4 solid harmonic to the ellipsoid of
demo 02 keeps the body smooth and strictly convex, but its grazes bend out
of plane by up to about 1.8% of their diameter.

Run:  python3 demos/03_perturbed_fails.py
"""

from pathlib import Path

import numpy as np

from graze_lab import BodyPair, SupportBody, trace_graze, validate_body
from graze_lab.harness import ApexGrid, certify_ellipsoid, verify_lemma1
from graze_lab.svg import emit_svg

OUT = Path(__file__).parent / "out"
A = np.diag([4.0, 1.0, 1.0])

body = SupportBody.perturbed(A, [(4, 0, 0.05)])
check = validate_body(body)
print(f"valid convex body: {check.passed} (smallest curvature radius {check.convexity_margin:.3f})")

# a bigger coefficient breaks convexity and is rejected
bad = validate_body(SupportBody.perturbed(A, [(4, 0, 0.09)]))
print(f"with coefficient 0.09: valid={bad.passed}, smallest curvature radius {bad.convexity_margin:.3f}")

pair = BodyPair(SupportBody.ball(6.0), body)
grid = ApexGrid.on(pair.outer, 16)
rep = verify_lemma1(pair, grid)
print(f"lemma1: pass={rep.passed}, fails on {rep.failed_on}, worst {rep.worst_defect:.3e}")
rep = certify_ellipsoid(pair, grid)
print(f"certify: pass={rep.passed}, fails on {rep.failed_on}")
# the witness carries the largest defect of any kind; here that is the conic fit
w = next(row for row in rep.per_apex if row["apex"] == rep.witness_apex)
print(f"    witness apex {rep.witness_apex}: " + ", ".join(f"{k} {v:.4f}" for k, v in w["defects"].items()))
flat = max(rep.per_apex, key=lambda row: row["defects"]["planarity"])
print(f"    least planar graze from {np.round(flat['apex'], 3).tolist()}: planarity {flat['defects']['planarity']:.4f}")

graze = trace_graze(body, flat["apex"])
OUT.mkdir(exist_ok=True)
(OUT / "perturbed_graze.svg").write_text(emit_svg([("graze", graze.points)], title="perturbed body: least planar graze"))
print(f"figure written to {OUT / 'perturbed_graze.svg'} (carries a non-planarity warning)")
