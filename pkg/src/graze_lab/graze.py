"""Grazes, support cones and the curve where two opposite support cones meet.

The graze of a smooth strictly convex body ``L`` seen from an exterior apex
``x`` is traced in normal space: it is the zero set on the unit sphere of

    f(u) = h(u) - <x, u>,

i.e. the normals of the support planes through ``x``.  Each normal ``u`` is
mapped to its contact point ``grad h(u)`` on the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .bodies import SupportBody, as_point, fibonacci_sphere, normalize, tangent_basis
from .errors import ApexError, ContinuationError, GeometryError, InputError, NumericError

TRACE_TOL = 1e-10
CONE_TOL = 1e-8
EXTERIOR_MARGIN = 1e-6
MIN_STEP = 1e-4
MAX_STEP = 5e-2

# Fixed reference used to orient seeds and traversal; any generic vector works.
_REF = normalize(np.array([0.2672612419124244, 0.5345224838248488, 0.8017837257372732]))


@dataclass
class GrazeCurve:
    apex: np.ndarray
    normals: np.ndarray
    points: np.ndarray
    closed: bool
    body_tag: str
    steps: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.points)

    def __neg__(self):
        return GrazeCurve(-self.apex, -self.normals, -self.points, self.closed, self.body_tag, self.steps)


@dataclass
class OmegaCurve:
    apex: np.ndarray
    points: np.ndarray
    ray_params: np.ndarray
    body_tag: str

    def __len__(self):
        return len(self.points)


def graze_residual(body, x, u):
    """``h(u) - <x, u>``: zero exactly on normals of support planes through ``x``."""
    return body.h(u) - np.asarray(u) @ np.asarray(x)


def _check_apex(body, x, exterior_margin):
    g = body.gauge(x)
    if not g > 1.0 + exterior_margin:
        raise ApexError(f"apex {np.asarray(x).tolist()} is not strictly outside the body (gauge {g:.12g})")
    return g


def _newton_tol(x):
    return 1e-13 * max(float(np.linalg.norm(x)), 1e-3)


def _correct(body, x, u, tol, max_iter=12):
    """Newton projection of ``u`` onto the graze normals. Returns ``(u, iterations)``."""
    for k in range(max_iter + 1):
        p = body.grad(u)
        f = p @ u - x @ u
        if abs(f) <= tol:
            return u, k
        if k == max_iter:
            break
        g = (p - x) - f * u
        gg = g @ g
        if gg == 0.0:
            break
        u = normalize(u - f * g / gg)
    raise NumericError(f"graze corrector did not converge (|f| = {abs(f):.3g})")


def _solve_on_graze(body, x, u, second, tol, max_iter=30):
    """Newton on the sphere for ``f(u) = 0`` together with ``second(u) = 0``.

    ``second(u, p, H)`` returns the value and R^3 gradient of the extra
    equation, where ``p = grad h(u)`` and ``H`` is the Hessian.
    """
    for _ in range(max_iter):
        p = body.grad(u)
        H = body.hess(u)
        f = p @ u - x @ u
        s, ds = second(u, p, H)
        if abs(f) <= tol and abs(s) <= tol:
            return u
        e1, e2 = tangent_basis(u)
        gf = p - x
        J = np.array([[gf @ e1, gf @ e2], [ds @ e1, ds @ e2]])
        try:
            delta = np.linalg.solve(J, [-f, -s])
        except np.linalg.LinAlgError as exc:
            raise NumericError("singular Jacobian while solving on the graze") from exc
        # damp steps that would leave the neighbourhood of the start
        n = math.hypot(*delta)
        if n > 0.2:
            delta *= 0.2 / n
        u = normalize(u + delta[0] * e1 + delta[1] * e2)
    raise NumericError("constrained graze solve did not converge")


def graze_seed(body: SupportBody, x, exterior_margin=EXTERIOR_MARGIN, trace_tol=TRACE_TOL):
    """A unit normal ``u`` with ``|h(u) - <x, u>| < trace_tol``.

    Bisects ``f`` along a half great circle from a separating normal
    (``f < 0``) to its antipode (``f > 0``).
    """
    x = as_point(x)
    _check_apex(body, x, exterior_margin)
    w = body.contact_normal(x)
    e = np.cross(w, _REF)
    if np.linalg.norm(e) < 1e-3:
        e = np.cross(w, [1.0, 0.0, 0.0])
    e = normalize(e)

    def along(theta):
        u = math.cos(theta) * w + math.sin(theta) * e
        return float(body.h(u) - u @ x)

    f0, f1 = along(0.0), along(math.pi)
    if not (f0 < 0 < f1):
        raise NumericError(f"seed bracket failed (f(0)={f0:.3g}, f(pi)={f1:.3g})")
    theta = brentq(along, 0.0, math.pi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    u = normalize(math.cos(theta) * w + math.sin(theta) * e)
    u, _ = _correct(body, x, u, min(trace_tol, _newton_tol(x)))
    return u


def graze_by_angle(body: SupportBody, x, count=64, exterior_margin=EXTERIOR_MARGIN, tol=None) -> GrazeCurve:
    """Graze sampled at ``count`` equally spaced angles about the separating normal.

    Normal ``k`` is the unique zero of ``f`` on the half great circle from the
    separating normal ``w`` to ``-w`` in azimuth ``2 pi k / count``.  The
    angle measure depends only on ``body`` and ``x``, so periodic trapezoid
    sums over these samples approximate curve integrals independently of
    where the azimuth origin falls.
    """
    x = as_point(x)
    _check_apex(body, x, exterior_margin)
    tol = _newton_tol(x) if tol is None else tol
    w = body.contact_normal(x)
    e1, e2 = tangent_basis(w)
    phi = 2 * np.pi * np.arange(count) / count
    e = np.outer(np.cos(phi), e1) + np.outer(np.sin(phi), e2)

    def at(theta):
        return np.cos(theta)[:, None] * w + np.sin(theta)[:, None] * e

    lo, hi = np.zeros(count), np.full(count, np.pi)
    theta = np.full(count, 0.5 * np.pi)
    for _ in range(100):
        u = at(theta)
        p = body.grad(u)
        f = np.einsum("ij,ij->i", p - x, u)
        if np.all(np.abs(f) <= tol):
            return GrazeCurve(apex=x, normals=u, points=p, closed=True, body_tag=body.tag)
        neg = f < 0
        lo = np.where(neg, theta, lo)
        hi = np.where(neg, hi, theta)
        # df/dtheta = <grad h(u) - x, du/dtheta> since <grad h, u> = h
        du = -np.sin(theta)[:, None] * w + np.cos(theta)[:, None] * e
        df = np.einsum("ij,ij->i", p - x, du)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = theta - f / df
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        theta = np.where(bad, 0.5 * (lo + hi), step)
    raise NumericError("angular graze sampling did not converge")


def trace_graze(body: SupportBody, x, step=2e-2, *, min_step=MIN_STEP, max_step=MAX_STEP,
                trace_tol=TRACE_TOL, exterior_margin=EXTERIOR_MARGIN, max_samples=20000):
    """Trace the graze of ``body`` from apex ``x`` by predictor-corrector continuation.

    Parameters
    ----------
    step : float
        Initial arc-length step on the sphere of normals.
    min_step, max_step : float
        Bounds for the adaptive step.  Pass ``max_step=step`` for a uniform
        sampling density.

    Returns
    -------
    GrazeCurve
        Closed, ordered samples ``(u_i, grad h(u_i))``.
    """
    x = as_point(x)
    if not 1e-4 <= step <= 1e-1:
        raise InputError(f"step {step} outside [1e-4, 1e-1]")
    max_step = max(max_step, step)
    seed = graze_seed(body, x, exterior_margin, trace_tol)
    tight = min(trace_tol, _newton_tol(x))

    def tangent(u):
        g = body.grad(u) - x
        t = np.cross(u, g)
        return t / np.linalg.norm(t)

    t0 = tangent(seed)
    # orientation flips with the apex so that tracing from -x mirrors tracing from x
    key = t0 @ np.cross(x, _REF)
    if abs(key) < 1e-9 * np.linalg.norm(x):
        key = t0 @ _REF
    orient = 1.0 if key >= 0 else -1.0

    normals = [seed]
    steps = []
    u = seed
    s = step
    while True:
        if len(normals) > max_samples:
            raise ContinuationError(f"no closure within {max_samples} samples", last_good=u)
        t = orient * tangent(u)
        while True:
            pred = math.cos(s) * u + math.sin(s) * t
            try:
                new, iters = _correct(body, x, pred, tight)
                moved = math.acos(min(1.0, float(new @ u)))
                ok = 0.5 * s < moved < 2.0 * s and (new - u) @ t > 0
            except NumericError:
                ok, iters = False, None
            if ok:
                break
            s *= 0.5
            if s < min_step:
                raise ContinuationError("corrector diverged below the minimum step", last_good=u)
        normals.append(new)
        steps.append(moved)
        u = new
        if iters > 4:
            s = max(0.5 * s, min_step)
        elif iters <= 2:
            s = min(2.0 * s, max_step)
        gap = math.acos(min(1.0, float(u @ seed)))
        if len(normals) >= 10 and gap < s:
            if gap < 0.5 * steps[-1]:
                normals.pop()
                steps.pop()
            break

    normals = np.array(normals)
    return GrazeCurve(
        apex=x.copy(),
        normals=normals,
        points=body.grad(normals),
        closed=True,
        body_tag=body.tag,
        steps=np.array(steps),
    )


def graze_tangent(body, x, u):
    """Unit tangent of the graze curve (in space) at the contact point with normal ``u``."""
    du = np.cross(u, body.grad(u) - x)
    return normalize(body.hess(u) @ du)


def _check_graze(body, x, graze):
    if graze is None or len(graze.points) == 0:
        raise InputError("empty graze")
    if not np.allclose(graze.apex, x, rtol=0, atol=1e-12 * max(1.0, np.linalg.norm(x))):
        raise InputError(f"graze apex {graze.apex.tolist()} does not match {np.asarray(x).tolist()}")
    if graze.body_tag != body.tag:
        raise InputError(f"graze was traced for body {graze.body_tag!r}, not {body.tag!r}")


def _cone_max(body, x, graze, y):
    d = y - x
    vals = graze.normals @ y - body.h(graze.normals)
    i = int(np.argmax(vals))

    def second(u, p, H):
        val = u @ np.cross(p - x, d)
        return val, np.cross(p - x, d) + H @ np.cross(d, u)

    scale = max(float(np.linalg.norm(d)), 1e-300)
    try:
        u = _solve_on_graze(body, x, graze.normals[i], second, 1e-14 * max(scale, np.linalg.norm(x)), max_iter=12)
        refined = float(u @ y - body.h(u))
        if refined >= vals[i] - 1e-12 * scale and math.acos(min(1.0, float(u @ graze.normals[i]))) < 0.5:
            return refined, u
    except NumericError:
        pass
    return float(vals[i]), graze.normals[i]


def cone_membership(body: SupportBody, x, graze: GrazeCurve, y) -> float:
    """Support-cone function ``F_x(y) = max_i (<u_i, y> - h(u_i))``.

    Negative inside the cone from ``x`` over the body, zero on its boundary,
    positive outside.  The discrete maximum over the traced normals is refined
    on the continuous graze, so the value carries no sampling error.
    """
    x, y = as_point(x), as_point(y)
    _check_graze(body, x, graze)
    return _cone_max(body, x, graze, y)[0]


def _distance_lower_bound(body, x):
    u = fibonacci_sphere(4000)
    return float(np.max(u @ x - body.h(u)))


def trace_omega(body: SupportBody, x, graze: GrazeCurve, t_max=None) -> OmegaCurve:
    """Sample ``S(L, x) & S(L, -x)`` along the generators through the graze points.

    For each graze point ``a`` the ray ``x + t (a - x)``, ``t >= 1``, is
    bisected for the root of ``F_x(-y)``, which measures membership in the
    opposite cone (the body is origin-symmetric).
    """
    x = as_point(x)
    _check_graze(body, x, graze)
    if t_max is None:
        dist = _distance_lower_bound(body, x)
        t_max = 10.0 * (np.linalg.norm(x) + body.diameter) / dist
    ys, ts = [], []
    t_prev = None
    for k, a in enumerate(graze.points):
        ray = a - x
        t = None if t_prev is None else _omega_newton(body, x, graze, ray, t_prev, t_max)
        if t is None:
            def G(t):
                return _cone_max(body, x, graze, -(x + t * ray))[0]

            g0, g1 = G(1.0), G(t_max)
            if not (g0 < 0 < g1):
                raise GeometryError(f"no sign change on ray {k} within t in [1, {t_max:.4g}]")
            t = brentq(G, 1.0, t_max, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
        t_prev = t
        ts.append(t)
        ys.append(x + t * ray)
    return OmegaCurve(apex=x.copy(), points=np.array(ys), ray_params=np.array(ts), body_tag=body.tag)


def _omega_newton(body, x, graze, ray, t0, t_max, max_iter=20):
    # Safeguarded Newton on t for F_x(-(x + t ray)) = 0, warm-started from the
    # neighbouring ray; dF/dt = -<u*, ray> by the envelope theorem.
    lo, hi = 1.0, t_max
    t = t0
    tol = 1e-14 * max(float(np.linalg.norm(x)), 1.0)
    for _ in range(max_iter):
        g, u = _cone_max(body, x, graze, -(x + t * ray))
        if abs(g) <= tol:
            return t
        if g < 0:
            lo = t
        else:
            hi = t
        dg = -(u @ ray)
        t_new = t - g / dg if dg != 0 else 0.5 * (lo + hi)
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 4 * np.finfo(float).eps * t:
            return t_new
        t = t_new
    return None


def omega_is_simple(omega: OmegaCurve) -> bool:
    """Simplicity of the closed polyline, checked in its best-fit plane."""
    from shapely.geometry import LinearRing

    P = omega.points - omega.points.mean(axis=0)
    _, _, vt = np.linalg.svd(P, full_matrices=False)
    return LinearRing(P @ vt[:2].T).is_simple


@dataclass(frozen=True)
class LineTest:
    misses: bool
    margin: float
    closest: np.ndarray

    def __bool__(self):
        return self.misses


def line_misses_body(body: SupportBody, p, q, tol=1e-10, margin_tol=1e-12) -> LineTest:
    """Does the line through ``p`` and ``q`` miss the body?

    Minimizes the gauge along the line; ``margin`` is ``min gauge - 1``.
    """
    p, q = as_point(p), as_point(q)
    d = q - p
    if not np.linalg.norm(d) > 0:
        raise InputError("p and q coincide")
    if body.kind == "ball":
        s = -(p @ d) / (d @ d)
    elif body.kind == "ellipsoid":
        Ad = body._inverse @ d
        s = -(p @ Ad) / (d @ Ad)
    else:
        s0 = -(p @ d) / (d @ d)
        r_in, r_out = body.extent
        y0 = p + s0 * d
        reach = 1.1 * r_out * max(np.linalg.norm(y0), r_in) / r_in / np.linalg.norm(d) + 1e-9
        res = minimize_scalar(lambda s: body.gauge(p + s * d), bracket=(s0 - reach, s0, s0 + reach),
                              method="golden", tol=tol)
        s = res.x
    closest = p + s * d
    margin = body.gauge(closest) - 1.0
    return LineTest(misses=bool(margin > margin_tol), margin=float(margin), closest=closest)
