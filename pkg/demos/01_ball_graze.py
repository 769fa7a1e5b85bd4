"""Grazes of a unit ball seen from outside.

From x = (2, 0, 0) the tangent cone touches the ball along a circle in the
plane p1 = 1/2 of radius sqrt(3)/2, and the opposite cone from -x meets the
first one in a circle of radius 2/sqrt(3) in the plane y1 = 0.  The script
traces both curves numerically, compares them with those circles and
writes a figure.

Run:  python3 demos/01_ball_graze.py
"""

from pathlib import Path

import numpy as np

from graze_lab import SupportBody, trace_graze, trace_omega
from graze_lab.curves import fit_plane, homothety_check, intersect_line_plane
from graze_lab.svg import emit_svg

OUT = Path(__file__).parent / "out"

ball = SupportBody.ball(1.0)
x = np.array([2.0, 0.0, 0.0])

graze = trace_graze(ball, x, 0.02, max_step=0.02)
plane = fit_plane(graze.points)
center = intersect_line_plane(x, -x, plane)
radii = np.linalg.norm(graze.points - center, axis=1)
print(f"graze: {len(graze)} samples, plane offset {plane.offset:.12f}, planarity {plane.rms_residual:.1e}")
print(f"  center {center.round(12)}, radius spread {radii.min():.12f} .. {radii.max():.12f}"
      f" (expected {np.sqrt(3) / 2:.12f})")

omega = trace_omega(ball, x, graze)
r = np.hypot(omega.points[:, 1], omega.points[:, 2])
print(f"omega: |y1| <= {np.abs(omega.points[:, 0]).max():.1e}, radius {r.mean():.12f} (expected {2 / np.sqrt(3):.12f})")

# the omega curve is the graze scaled about the apex
ratio, defect = homothety_check(graze.points, omega.points, x)
print(f"homothety about x: ratio {ratio:.12f} (expected {4 / 3:.12f}), defect {defect:.1e}")

OUT.mkdir(exist_ok=True)
svg = emit_svg([("graze", graze.points), ("omega", omega.points)], points=[("O_x", center)],
               title="unit ball from (2,0,0): graze and omega curve")
(OUT / "ball_graze.svg").write_text(svg)
print(f"figure written to {OUT / 'ball_graze.svg'}")
