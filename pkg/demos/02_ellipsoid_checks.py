"""Every check passes for an ellipsoid.

L is the ellipsoid with support function sqrt(u^T A u), A = diag(4, 1, 1),
inside a ball of radius 6.  Grazes of an ellipsoid are plane sections (the
polar plane of the apex), so each pipeline stage should report defects at
round-off level.

Run:  python3 demos/02_ellipsoid_checks.py        (about a minute)
"""

import numpy as np

from graze_lab import BodyPair, SupportBody
from graze_lab.harness import (
    ApexGrid,
    certify_ellipsoid,
    check_almost_free,
    lemma3_report,
    verify_lemma1,
    verify_lemma2,
    verify_theorem_construction,
)

A = np.diag([4.0, 1.0, 1.0])
pair = BodyPair(SupportBody.ball(6.0), SupportBody.ellipsoid(A))
grid = ApexGrid.on(pair.outer, 32)


def show(rep):
    state = "pass" if rep.passed else "FAIL " + ",".join(rep.failed_on)
    print(f"{rep.lemma_id:22s} {state:6s} worst defect {rep.worst_defect:.2e}")


show(verify_lemma1(pair, grid))
show(verify_lemma2(pair, grid))
show(check_almost_free(pair, grid))

# v(u) should point along A u
dirs = np.array([[0, 0, 1.0], [1, 1, 0], [1, 2, 3]])
dirs /= np.linalg.norm(dirs, axis=1)[:, None]
rep = lemma3_report(pair, dirs)
show(rep)
for u, row in zip(dirs, rep.per_apex):
    w = A @ u / np.linalg.norm(A @ u)
    print(f"    u={u.round(3)}  v={np.round(row['v'], 6)}  Au/|Au|={w.round(6)}")

rep = verify_theorem_construction(pair, [1.0, 0, 0], [0, 0, 1.0])
show(rep)
print(f"    {rep.details['feasible_y']} admissible y; support lines at a, b meet on the axis; "
      f"graze is an ellipse: {rep.details['is_ellipse']}")

rep = certify_ellipsoid(pair, grid)
show(rep)
print("   ", rep.notes[0])
