"""Deterministic SVG figures of planar curves.

All curves, marks and lines are projected orthographically onto one plane
fitted through the curve samples.  Output depends only on the input, so
figures can be diffed between runs.
"""

from xml.sax.saxutils import escape

import numpy as np

from .curves import PLANARITY_TOL, Line, fit_plane

_COLORS = ["#1f4e79", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e", "#566573"]


def _f(v):
    return f"{v:.4f}"


def emit_svg(curves, points=(), lines=(), title="", size=480, planarity_tol=PLANARITY_TOL):
    """Render ``curves`` (``[(label, (N, 3) array)]``) as an SVG document.

    ``points`` is ``[(label, p)]``; ``lines`` is ``[(label, Line)]`` and is
    clipped to the drawing box.  A non-planar input is still drawn in the
    best-fit plane, with a warning line under the title.
    """
    if not curves:
        raise ValueError("nothing to draw")
    cloud = np.vstack([np.asarray(c, dtype=float) for _, c in curves])
    plane = fit_plane(cloud)
    warn = plane.rms_residual > planarity_tol

    flat = [(label, plane.to2d(c)) for label, c in curves]
    marks = [(label, plane.to2d(np.asarray(p, dtype=float)[None])[0]) for label, p in points]
    box = np.vstack([c for _, c in flat] + [m[None] for _, m in marks])
    lo, hi = box.min(axis=0), box.max(axis=0)
    span = max(hi - lo) or 1.0
    lo, hi = lo - 0.08 * span, hi + 0.08 * span
    span = max(hi - lo)
    pad = 24
    header = 40 if (title or warn) else 0
    scale = (size - 2 * pad) / span

    def xy(p):
        return pad + (p[0] - lo[0]) * scale, header + pad + (hi[1] - p[1]) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + header}" '
        f'viewBox="0 0 {size} {size + header}">',
        f'<rect width="{size}" height="{size + header}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{pad}" y="18" font-family="sans-serif" font-size="14">{escape(title)}</text>')
    if warn:
        out.append(f'<text x="{pad}" y="34" font-family="sans-serif" font-size="11" fill="#b03a2e">'
                   f'warning: curves not planar (residual {plane.rms_residual:.3g}); drawn in best-fit plane</text>')
    for k, (label, c) in enumerate(flat):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in map(xy, c))
        out.append(f'<polygon points="{pts}" fill="none" stroke="{color}" stroke-width="1.5">'
                   f'<title>{escape(label)}</title></polygon>')
    center = 0.5 * (lo + hi)
    for k, (label, line) in enumerate(lines):
        p0 = plane.to2d(np.asarray(line.point)[None])[0]
        d = plane.to2d((line.point + line.direction)[None])[0] - p0
        if np.linalg.norm(d) < 1e-12:
            continue
        d = d / np.linalg.norm(d)
        t0 = (center - p0) @ d
        a, b = xy(p0 + (t0 - span) * d), xy(p0 + (t0 + span) * d)
        out.append(f'<line x1="{_f(a[0])}" y1="{_f(a[1])}" x2="{_f(b[0])}" y2="{_f(b[1])}" '
                   f'stroke="#888888" stroke-width="0.8" stroke-dasharray="4 3"><title>{escape(label)}</title></line>')
    for label, m in marks:
        cx, cy = xy(m)
        out.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="3" fill="black"/>')
        out.append(f'<text x="{_f(cx + 5)}" y="{_f(cy - 5)}" font-family="sans-serif" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def theorem_figure(report, graze_points, shown=3):
    """Graze, axis, and for the first ``shown`` admissible ``y`` the chord ``ab``,
    the support lines at ``a`` and ``b`` and their meeting point ``c``."""
    det = report.details
    axis = Line(np.array(det["axis"]["point"]), np.array(det["axis"]["direction"]))
    curves = [("graze", graze_points)]
    lines = [("axis", axis)]
    points = []
    for k, t in enumerate(det["tangencies"][:shown]):
        a, b, c = (np.array(t[key]) for key in ("a", "b", "c"))
        curves.append((f"chord a{k}b{k}", np.array([a, b])))
        lines += [(f"support at a{k}", Line(a, np.array(t["support_a"]))),
                  (f"support at b{k}", Line(b, np.array(t["support_b"])))]
        points += [(f"a{k}", a), (f"b{k}", b), (f"c{k}", c)]
    return emit_svg(curves, points=points, lines=lines,
                    title=f"support-line construction, apex {np.round(det['apex'], 3).tolist()}")
