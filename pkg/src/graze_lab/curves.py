"""Geometric tests on sampled closed curves.

Curves are ``(N, 3)`` arrays of ordered samples.  Distances, tangents and
chord endpoints are evaluated on a periodic cubic spline through the samples
(chord-length parameterization) unless ``smooth=False``, in which case the
closed polyline itself is used.  All defects are normalized by the curve
diameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial.distance import pdist

from .bodies import normalize, tangent_basis
from .errors import DegenerateError, FitError, GeometryError, InputError

PLANARITY_TOL = 1e-6
SYMMETRY_TOL = 1e-6
CONCURRENCY_TOL = 1e-5
CONIC_TOL = 1e-7
PARALLEL_TOL = 1e-8


def _points(points, minimum):
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] not in (2, 3):
        raise InputError(f"expected an (N, 3) array of points, got shape {P.shape}")
    if P.shape[1] == 2:
        P = np.column_stack([P, np.zeros(len(P))])
    if len(P) > 1 and np.array_equal(P[0], P[-1]):
        P = P[:-1]
    if len(P) < minimum:
        raise InputError(f"need at least {minimum} points, got {len(P)}")
    return P


def diameter(points):
    P = np.asarray(points, dtype=float)
    if len(P) > 3000:
        from scipy.spatial import ConvexHull

        try:
            P = P[ConvexHull(P).vertices]
        except Exception:
            pass
    return float(pdist(P).max())


@dataclass(frozen=True)
class Line:
    point: np.ndarray
    direction: np.ndarray

    def distance(self, q):
        r = np.asarray(q, dtype=float) - self.point
        return float(np.linalg.norm(r - (r @ self.direction) * self.direction))


def line_through(p, q):
    p = np.asarray(p, dtype=float)
    return Line(p, normalize(np.asarray(q, dtype=float) - p))


class ClosedCurve:
    """Periodic interpolant through ordered samples of a closed curve."""

    def __init__(self, points, smooth=True):
        P = _points(points, 4)
        self.points = P
        self.smooth = smooth
        closed = np.vstack([P, P[:1]])
        seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
        if np.any(seg == 0):
            raise InputError("curve has repeated consecutive samples")
        self.knots = np.concatenate([[0.0], np.cumsum(seg)])
        self.period = self.knots[-1]
        self._closed = closed
        if smooth:
            self._spline = CubicSpline(self.knots, closed, bc_type="periodic")

    def __len__(self):
        return len(self.points)

    def __call__(self, tau, nu=0):
        tau = np.mod(tau, self.period)
        if self.smooth:
            return self._spline(tau, nu)
        i = np.clip(np.searchsorted(self.knots, tau, side="right") - 1, 0, len(self.points) - 1)
        d = self._closed[i + 1] - self._closed[i]
        h = (self.knots[i + 1] - self.knots[i])[..., None]
        if nu == 1:
            return d / h
        w = ((tau - self.knots[i]) / (self.knots[i + 1] - self.knots[i]))[..., None]
        return self._closed[i] + w * d

    def tangent(self, tau):
        return normalize(self(tau, 1))

    @property
    def diameter(self):
        if not hasattr(self, "_diam"):
            self._diam = diameter(self.points)
        return self._diam

    def _segment_projection(self, q):
        a, b = self._closed[:-1], self._closed[1:]
        d = b - a
        w = np.clip(np.einsum("ij,ij->i", q - a, d) / np.einsum("ij,ij->i", d, d), 0.0, 1.0)
        dist = np.linalg.norm(a + w[:, None] * d - q, axis=1)
        return dist, w

    def nearest(self, q):
        """``(tau, distance)`` of the curve point closest to ``q``."""
        q = np.asarray(q, dtype=float)
        dist, w = self._segment_projection(q)
        if not self.smooth:
            k = int(np.argmin(dist))
            return self.knots[k] + w[k] * (self.knots[k + 1] - self.knots[k]), float(dist[k])
        best = (None, np.inf)
        for k in np.argsort(dist)[:2]:
            lo, hi = self.around_segment(k)
            tau, dval = _minimize_on(lambda t: self(t) - q, lambda t: self(t, 1), lo, hi)
            if dval < best[1]:
                best = (tau, dval)
        return best[0] % self.period, float(best[1])

    def distance(self, queries):
        Q = np.atleast_2d(np.asarray(queries, dtype=float))
        if not self.smooth:
            return np.array([self.nearest(q)[1] for q in Q])
        # two nearest chords per query, then a bracketed Newton on each
        a, d = self._closed[:-1], np.diff(self._closed, axis=0)
        rel = Q[:, None, :] - a[None]
        w = np.clip(np.einsum("qnj,nj->qn", rel, d) / np.einsum("nj,nj->n", d, d), 0.0, 1.0)
        chord = np.linalg.norm(rel - w[..., None] * d[None], axis=2)
        cand = np.argsort(chord, axis=1)[:, :2]
        best = np.full(len(Q), np.inf)
        for j in range(cand.shape[1]):
            k = cand[:, j]
            lo = self.knots[k] - self._seglen(k - 1)
            hi = self.knots[k + 1] + self._seglen(k + 1)
            dist = self._bracketed_distance(Q, lo, hi)
            best = np.minimum(best, dist)
        return best

    def _bracketed_distance(self, Q, lo, hi, iters=60):
        def dphi(t):
            return np.einsum("ij,ij->i", self(t) - Q, self(t, 1))

        flo, fhi = dphi(lo), dphi(hi)
        ok = (flo < 0) & (fhi > 0)
        out = np.empty(len(Q))
        t = 0.5 * (lo + hi)
        a, b = lo.copy(), hi.copy()
        for _ in range(iters):
            r, v = self(t) - Q, self(t, 1)
            g = np.einsum("ij,ij->i", r, v)
            dg = np.einsum("ij,ij->i", v, v) + np.einsum("ij,ij->i", r, self(t, 2))
            a = np.where(g < 0, t, a)
            b = np.where(g < 0, b, t)
            with np.errstate(divide="ignore", invalid="ignore"):
                nt = t - g / dg
            bad = ~np.isfinite(nt) | (nt <= a) | (nt >= b)
            nt = np.where(bad, 0.5 * (a + b), nt)
            done = np.abs(nt - t) <= 1e-15 * np.maximum(1.0, np.abs(t))
            t = nt
            if np.all(done | ~ok):
                break
        out[ok] = np.linalg.norm(self(t[ok]) - Q[ok], axis=1)
        # endpoints not bracketing a stationary point: fall back to the scalar search
        for i in np.flatnonzero(~ok):
            q = Q[i]
            out[i] = _minimize_on(lambda s: self(s) - q, lambda s: self(s, 1), lo[i], hi[i])[1]
        return out

    def knot_interval(self, k):
        return self.knots[k], self.knots[k + 1]

    def _seglen(self, k):
        k = k % len(self.points)
        return self.knots[k + 1] - self.knots[k]

    def around_vertex(self, k):
        """Parameter interval covering the two segments adjacent to vertex ``k``."""
        return self.knots[k] - self._seglen(k - 1), self.knots[k] + self._seglen(k)

    def around_segment(self, k):
        """Parameter interval covering segment ``k`` and its two neighbours."""
        return self.knots[k] - self._seglen(k - 1), self.knots[k + 1] + self._seglen(k + 1)


def _minimize_on(residual, dresidual, lo, hi):
    # minimize |r(t)|^2 on [lo, hi]; root of its derivative when bracketed
    def dphi(t):
        return float(residual(t) @ dresidual(t))

    a, b = dphi(lo), dphi(hi)
    if a < 0 < b:
        t = brentq(dphi, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    else:
        t = minimize_scalar(lambda t: float(residual(t) @ residual(t)), bounds=(lo, hi), method="bounded",
                            options={"xatol": 1e-13 * max(1.0, abs(hi - lo))}).x
    return t, float(np.linalg.norm(residual(t)))


def hausdorff(curve_a, curve_b, smooth=True):
    """Symmetric Hausdorff distance between two sampled closed curves."""
    A = ClosedCurve(curve_a, smooth) if not isinstance(curve_a, ClosedCurve) else curve_a
    B = ClosedCurve(curve_b, smooth) if not isinstance(curve_b, ClosedCurve) else curve_b
    return float(max(B.distance(A.points).max(), A.distance(B.points).max()))


# -- planes -----------------------------------------------------------------


@dataclass(frozen=True)
class PlaneFit:
    normal: np.ndarray
    offset: float
    rms_residual: float = 0.0
    diameter: float = float("nan")
    centroid: np.ndarray = None

    @property
    def origin(self):
        return self.centroid if self.centroid is not None else self.offset * self.normal

    def frame(self):
        """In-plane orthonormal basis ``(e1, e2)``."""
        return tangent_basis(self.normal)

    def to2d(self, points):
        e1, e2 = self.frame()
        P = np.asarray(points, dtype=float) - self.origin
        return np.column_stack([P @ e1, P @ e2])

    def to3d(self, coords):
        e1, e2 = self.frame()
        c = np.asarray(coords, dtype=float)
        return self.origin + c[..., :1] * e1 + c[..., 1:2] * e2

    def project(self, points):
        P = np.asarray(points, dtype=float)
        return P - np.outer(P @ self.normal - self.offset, self.normal)

    def distance(self, points):
        return np.abs(np.asarray(points, dtype=float) @ self.normal - self.offset)


def fit_plane(points) -> PlaneFit:
    """Least-squares plane through the centroid of a point cloud."""
    P = _points(points, 4)
    c = P.mean(axis=0)
    _, s, vt = np.linalg.svd(P - c, full_matrices=False)
    if s[1] <= 1e-12 * s[0]:
        raise FitError("point cloud is collinear")
    n = vt[2]
    offset = float(n @ c)
    diam = diameter(P)
    if offset < 0 or (abs(offset) <= 1e-12 * diam and n[np.argmax(np.abs(n))] < 0):
        n, offset = -n, -offset
    rms = float(np.sqrt(np.mean((P @ n - offset) ** 2))) / diam
    return PlaneFit(normal=n, offset=offset, rms_residual=rms, diameter=diam, centroid=c)


def intersect_line_plane(p, q, plane, parallel_tol=PARALLEL_TOL):
    """Intersection of the line through ``p`` and ``q`` with ``plane``."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    d = q - p
    n = np.asarray(plane.normal, dtype=float)
    denom = n @ d
    if abs(denom) <= parallel_tol * np.linalg.norm(d) * np.linalg.norm(n):
        raise DegenerateError("line is parallel to the plane")
    t = (plane.offset - n @ p) / denom
    return p + t * d


# -- symmetry ---------------------------------------------------------------


@dataclass
class SymmetryReport:
    defect: float
    witness: int
    center_or_axis: object

    def to_dict(self):
        c = self.center_or_axis
        if isinstance(c, Line):
            c = {"point": c.point.tolist(), "direction": c.direction.tolist()}
        elif c is not None:
            c = np.asarray(c).tolist()
        return {"defect": self.defect, "witness": self.witness, "center_or_axis": c}


def central_symmetry_defect(points, center, smooth=True) -> SymmetryReport:
    """Worst distance from a reflected sample ``2c - p`` back to the curve."""
    curve = ClosedCurve(_points(points, 8), smooth)
    center = np.asarray(center, dtype=float)
    d = curve.distance(2 * center - curve.points) / curve.diameter
    i = int(np.argmax(d))
    return SymmetryReport(float(d[i]), i, center)


@dataclass
class HomothetyResult:
    ratio: float
    defect: float
    ratios: np.ndarray
    misses: np.ndarray

    def __iter__(self):
        return iter((self.ratio, self.defect))


def _ray_hits(curve, c, d, cos_min):
    """Ray parameters ``s`` and misses where the ray ``c + s d`` meets the curve."""
    rel = curve.points - c
    along = rel @ d
    perp = rel - np.outer(along, d)
    miss = np.linalg.norm(perp, axis=1)
    ang = np.where(along > 0, miss / np.maximum(along, 1e-300), np.inf)
    n = len(ang)
    cand = [k for k in range(n) if ang[k] <= ang[k - 1] and ang[k] <= ang[(k + 1) % n] and ang[k] < 0.5]
    hits = []
    for k in cand:
        lo, hi = curve.around_vertex(k)

        def residual(t):
            r = curve(t) - c
            return r - (r @ d) * d

        tau, m = _minimize_on(residual, lambda t: curve(t, 1), lo, hi)
        s = float((curve(tau) - c) @ d)
        if s > 0:
            hits.append((s, m))
    if not hits:
        return []
    hits.sort()
    merged = [hits[0]]
    for s, m in hits[1:]:
        if abs(s - merged[-1][0]) > 1e-9 * s:
            merged.append((s, m))
    best = min(m / s for s, m in merged)
    if best > cos_min:
        return []
    return [(s, m) for s, m in merged if m / s <= max(1e-3, 10 * best)]


def _hit_near(curve, c, d, q):
    # the curve point closest to the predicted image q, seen along the ray c + s d
    tau, _ = curve.nearest(q)
    r = curve(tau) - c
    s = float(r @ d)
    return s, float(np.linalg.norm(r - s * d))


def homothety_check(curve_a, curve_b, center, smooth=True) -> HomothetyResult:
    """Ratio and defect of a homothety with the given center taking A onto B.

    Each ray from ``center`` through a sample of A is intersected with B; the
    ratio is the median of the per-sample ratios and the defect the largest
    relative deviation from it (including any transverse miss).  When a ray
    meets B more than once, the crossing with the same rank as the sample's
    own crossing of A is used, then the choice is refined against the median.
    """
    A = ClosedCurve(_points(curve_a, 8), smooth)
    B = ClosedCurve(_points(curve_b, 8), smooth)
    c = np.asarray(center, dtype=float)
    rays, first = [], []
    for k, a in enumerate(A.points):
        sa = np.linalg.norm(a - c)
        if sa == 0:
            raise InputError("homothety center lies on curve A")
        d = (a - c) / sa
        hits = _ray_hits(B, c, d, 0.1)
        if not hits:
            raise GeometryError(f"ray {k} from the center misses curve B")
        if len(hits) > 1:
            own = _ray_hits(A, c, d, 0.1)
            rank = int(np.argmin([abs(s - sa) for s, _ in own])) if own else 0
            pick = hits[min(rank, len(hits) - 1)]
        else:
            pick = hits[0]
        rays.append((sa, d, hits))
        first.append(pick[0] / sa)
    guess = float(np.median(first))
    ratios, misses = [], []
    for sa, d, hits in rays:
        hits = hits + [_hit_near(B, c, d, c + guess * sa * d)]
        s, m = min(hits, key=lambda h: abs(h[0] / sa - guess) + h[1] / h[0])
        ratios.append(s / sa)
        misses.append(m / s)
    ratios, misses = np.array(ratios), np.array(misses)
    med = float(np.median(ratios))
    defect = float(np.max(np.maximum(np.abs(ratios / med - 1.0), misses)))
    return HomothetyResult(med, defect, ratios, misses)


# -- chords, support lines, concurrency -------------------------------------


def _planar(points, planarity_tol):
    P = _points(points, 8)
    fit = fit_plane(P)
    if fit.rms_residual > planarity_tol:
        raise InputError(f"curve is not planar (residual {fit.rms_residual:.3g} > {planarity_tol:g})")
    return P, fit


def chords_parallel(points, v, count=32, smooth=True, planarity_tol=PLANARITY_TOL,
                    parallel_tol=PARALLEL_TOL, exclude=0.02):
    """Chords of a planar convex curve parallel to ``v``.

    Slices the curve by ``count`` lines parallel to ``v`` evenly spaced in
    the conjugate in-plane direction, skipping ``exclude`` of the extent at
    each end.  Returns ``(A, B)`` endpoint pairs ordered along ``v``.
    """
    P, fit = _planar(points, planarity_tol)
    v = normalize(np.asarray(v, dtype=float))
    if abs(v @ fit.normal) > parallel_tol:
        raise InputError("chord direction is not parallel to the curve's plane")
    w = normalize(np.cross(fit.normal, v))
    curve = ClosedCurve(P, smooth)
    height = P @ w
    lo, hi = height.min(), height.max()
    ext = hi - lo
    chords = []
    for level in np.linspace(lo + exclude * ext, hi - exclude * ext, count):
        g = height - level
        ends = []
        for k in range(len(P)):
            k1 = (k + 1) % len(P)
            if g[k] == 0:
                ends.append(P[k])
            elif g[k] * g[k1] < 0:
                t0, t1 = curve.knot_interval(k)
                if smooth:
                    tau = brentq(lambda t: float(curve(t) @ w - level), t0, t1, xtol=1e-15)
                    ends.append(curve(tau))
                else:
                    ends.append(P[k] + g[k] / (g[k] - g[k1]) * (P[k1] - P[k]))
        if len(ends) < 2:
            continue
        ends = np.array(ends)
        along = ends @ v
        chords.append((ends[np.argmin(along)], ends[np.argmax(along)]))
    return chords


def support_line_at(points, endpoint, smooth=True, on_curve_tol=1e-6) -> Line:
    """Supporting line of a convex closed curve at one of its points."""
    curve = ClosedCurve(_points(points, 4), smooth)
    endpoint = np.asarray(endpoint, dtype=float)
    tau, dist = curve.nearest(endpoint)
    if dist > on_curve_tol * curve.diameter:
        raise InputError(f"point is not on the curve (distance {dist:.3g})")
    if smooth:
        return Line(endpoint, curve.tangent(tau))
    k = int(np.searchsorted(curve.knots, tau, side="right") - 1) % len(curve)
    seg = curve.knots[k + 1] - curve.knots[k]
    frac = (tau - curve.knots[k]) / seg
    edge = normalize(curve._closed[k + 1] - curve._closed[k])
    if min(frac, 1 - frac) * seg <= 1e-9 * curve.diameter:
        j = k if frac < 0.5 else (k + 1) % len(curve)
        before = normalize(curve.points[j] - curve.points[j - 1])
        after = normalize(curve.points[(j + 1) % len(curve)] - curve.points[j])
        return Line(endpoint, normalize(before + after))
    return Line(endpoint, edge)


@dataclass
class Concurrency:
    point: np.ndarray
    defect: float
    parallel_pairs: int

    def __iter__(self):
        return iter((self.point, self.defect))


def _closest_points(l1, l2):
    w = l1.point - l2.point
    b = l1.direction @ l2.direction
    denom = 1.0 - b * b
    s = (b * (l2.direction @ w) - (l1.direction @ w)) / denom
    t = ((l2.direction @ w) - b * (l1.direction @ w)) / denom
    return 0.5 * (l1.point + s * l1.direction + l2.point + t * l2.direction)


def concurrency_defect(lines, parallel_tol=PARALLEL_TOL, scale=None) -> Concurrency:
    """Least-squares common point of a set of lines and how far they miss it.

    The defect is the largest point-line distance divided by ``scale``
    (default: the spread of the pairwise intersections or of the line anchor
    points, whichever is larger).  Parallel pairs meet at infinity; they are
    counted in ``parallel_pairs`` and left out of the spread.
    """
    lines = [Line(np.asarray(l.point, float), normalize(np.asarray(l.direction, float))) for l in lines]
    if len(lines) < 2:
        raise InputError("need at least two lines")
    crossings, parallel = [], 0
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            sin = np.linalg.norm(np.cross(lines[i].direction, lines[j].direction))
            if sin <= parallel_tol:
                parallel += 1
            else:
                crossings.append(_closest_points(lines[i], lines[j]))
    if not crossings:
        raise DegenerateError("all lines are parallel")
    M = np.zeros((3, 3))
    rhs = np.zeros(3)
    for l in lines:
        proj = np.eye(3) - np.outer(l.direction, l.direction)
        M += proj
        rhs += proj @ l.point
    # lines may be coplanar: solve in the least-squares sense and pin the
    # out-of-plane component to the crossings' mean
    point, *_ = np.linalg.lstsq(M, rhs, rcond=1e-12)
    if np.linalg.matrix_rank(M, tol=1e-12 * np.abs(M).max()) < 3:
        mean = np.mean(crossings, axis=0)
        _, _, vt = np.linalg.svd(M)
        point = point + (vt[-1] @ (mean - point)) * vt[-1]
    if scale is None:
        spread = pdist(np.array(crossings)).max() if len(crossings) > 1 else 0.0
        anchors = pdist(np.array([l.point for l in lines])).max()
        scale = max(spread, anchors)
    if scale <= 0:
        scale = 1.0
    defect = max(l.distance(point) for l in lines) / scale
    return Concurrency(point, float(defect), parallel)


def _convex_turning(P2):
    e = np.diff(np.vstack([P2, P2[:1]]), axis=0)
    cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    return cross


def affine_diameters(points, count=64, smooth=True, planarity_tol=np.inf):
    """Chords joining the contact points of pairs of parallel support lines.

    One chord per sampled support direction ``theta_k = k pi / count``.
    """
    P = _points(points, 16)
    fit = fit_plane(P)
    if fit.rms_residual > planarity_tol:
        raise InputError(f"curve is not planar (residual {fit.rms_residual:.3g})")
    turning = _convex_turning(fit.to2d(P))
    sign = np.sign(np.sum(turning))
    if np.any(sign * turning < -1e-12 * np.abs(turning).max()):
        raise InputError("curve is not convex (negative turning)")
    curve = ClosedCurve(P, smooth)
    e1, e2 = fit.frame()
    out = []
    for theta in np.arange(count) * np.pi / count:
        n = np.cos(theta) * e1 + np.sin(theta) * e2
        ends = []
        for sgn in (1.0, -1.0):
            k = int(np.argmax(sgn * (P @ n)))
            if smooth:
                lo, hi = curve.around_vertex(k)
                dn = lambda t: float(curve(t, 1) @ n)
                a, b = dn(lo), dn(hi)
                if a * b < 0:
                    ends.append(curve(brentq(dn, lo, hi, xtol=1e-15)))
                    continue
            ends.append(P[k])
        out.append((ends[0], ends[1]))
    return out


def affine_symmetry_defect(points, axis: Line, v, smooth=True, parallel_tol=PARALLEL_TOL) -> SymmetryReport:
    """Defect of the affine reflection that fixes ``axis`` and reverses ``v``."""
    curve = ClosedCurve(_points(points, 8), smooth)
    e = normalize(np.asarray(axis.direction, float))
    v = normalize(np.asarray(v, float))
    if np.linalg.norm(np.cross(e, v)) <= parallel_tol:
        raise InputError("reflection direction is parallel to the axis")
    basis = np.column_stack([e, v])
    rel = curve.points - axis.point
    coef, *_ = np.linalg.lstsq(basis, rel.T, rcond=None)
    rest = rel - (basis @ coef).T
    reflected = axis.point + np.outer(coef[0], e) - np.outer(coef[1], v) + rest
    d = curve.distance(reflected) / curve.diameter
    i = int(np.argmax(d))
    return SymmetryReport(float(d[i]), i, Line(np.asarray(axis.point, float), e))


# -- conics -----------------------------------------------------------------


@dataclass
class ConicFit:
    coefficients: np.ndarray
    residual: float
    is_ellipse: bool
    plane: PlaneFit | None = None

    @property
    def matrix(self):
        A, B, C = self.coefficients[:3]
        return np.array([[A, B / 2], [B / 2, C]])

    def center(self):
        """Center in plane coordinates."""
        D, E = self.coefficients[3:5]
        return np.linalg.solve(2 * self.matrix, [-D, -E])

    def conjugate(self, direction):
        """In-plane direction conjugate to ``direction`` (2-vector)."""
        w = self.matrix @ np.asarray(direction, float)
        return normalize(np.array([-w[1], w[0]]))

    def evaluate(self, xy):
        x, y = np.asarray(xy, float).T
        return np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)]) @ self.coefficients


def fit_conic(points) -> ConicFit:
    """Algebraic least-squares conic through planar points.

    ``(N, 2)`` input is fitted in its own coordinates; ``(N, 3)`` input is
    first mapped to the coordinates of its best-fit plane.  The residual is
    the RMS algebraic residual after centering and scaling the points to unit
    mean squared norm.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or len(P) < 6:
        raise InputError("need at least 6 points")
    plane = None
    if P.shape[1] == 3:
        plane = fit_plane(P)
        P = plane.to2d(P)
    m = P.mean(axis=0)
    s = np.sqrt(np.mean(np.sum((P - m) ** 2, axis=1)))
    if not s > 0:
        raise FitError("all points coincide")
    x, y = ((P - m) / s).T
    D = np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])
    _, sv, vt = np.linalg.svd(D, full_matrices=False)
    if sv[-2] <= 1e-10 * sv[0]:
        raise FitError("design matrix is rank deficient (points on a line or too few)")
    a, b, c, d, e, f = vt[-1]
    residual = float(np.sqrt(np.mean((D @ vt[-1]) ** 2)))
    # back to input coordinates: x_n = (x - mx)/s, y_n = (y - my)/s
    mx, my = m
    A, B, C = a / s**2, b / s**2, c / s**2
    Dn, En = d / s, e / s
    coef = np.array([
        A,
        B,
        C,
        -2 * A * mx - B * my + Dn,
        -2 * C * my - B * mx + En,
        A * mx * mx + B * mx * my + C * my * my - Dn * mx - En * my + f,
    ])
    coef /= np.linalg.norm(coef)
    return ConicFit(coef, residual, bool(coef[1] ** 2 - 4 * coef[0] * coef[2] < 0), plane)
