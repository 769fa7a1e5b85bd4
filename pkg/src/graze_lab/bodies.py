"""Origin-symmetric convex bodies described by smooth support functions.

Every body exposes its support function ``h`` through the 1-homogeneous
extension to R^3, so that ``gradient(u)`` is the boundary point with outer
normal ``u`` and ``hessian(u)`` restricted to ``u``-perp is the matrix of
principal radii of curvature.  All evaluators accept arrays of shape
``(..., 3)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import InputError, NumericError, ValidationError
from .harmonics import HarmonicPolynomial

KINDS = ("ball", "ellipsoid", "perturbed_ellipsoid")
UNIT_TOL = 1e-12


def as_direction(u, tol=UNIT_TOL):
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != 3:
        raise InputError(f"expected 3-vectors, got shape {u.shape}")
    norm = np.linalg.norm(u, axis=-1)
    if np.any(np.abs(norm - 1.0) > tol):
        raise InputError(f"direction is not unit (|u| = {np.ravel(norm)[0]!r})")
    return u


def as_point(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 3 or not np.all(np.isfinite(p)):
        raise InputError(f"expected finite 3-vectors, got {p!r}")
    return p


def normalize(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def tangent_basis(u):
    """Orthonormal ``(e1, e2)`` spanning ``u``-perp, with ``e1 x e2 = u``."""
    u = np.asarray(u, dtype=float)
    ref = np.where(np.abs(u[..., :1]) < 0.9, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    e1 = normalize(ref - np.sum(ref * u, axis=-1, keepdims=True) * u)
    e2 = np.cross(u, e1)
    return e1, e2


def fibonacci_sphere(n: int, seed: int | None = None):
    """Quasi-uniform unit vectors; optionally rotated by a seeded random rotation."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    if seed is not None:
        from scipy.spatial.transform import Rotation

        pts = pts @ Rotation.random(random_state=seed).as_matrix().T
    return normalize(pts)


@dataclass(frozen=True, eq=False)
class SupportBody:
    """Smooth origin-symmetric convex body.

    Use the :meth:`ball`, :meth:`ellipsoid` and :meth:`perturbed` constructors.
    ``harmonics`` holds ``(l, m, coef)`` triples added to ``sqrt(u^T A u)``
    on the unit sphere; only even ``l`` is accepted.
    """

    kind: str
    radius: float | None = None
    matrix: np.ndarray | None = None
    harmonics: tuple = ()
    tag: str = ""
    _polys: tuple = field(default=(), repr=False)

    @classmethod
    def ball(cls, radius: float, tag: str = ""):
        radius = float(radius)
        if not radius > 0:
            raise InputError(f"ball radius must be positive, got {radius}")
        return cls("ball", radius=radius, tag=tag or f"ball(r={radius:g})")

    @classmethod
    def ellipsoid(cls, matrix, tag: str = ""):
        A = _spd(matrix)
        return cls("ellipsoid", matrix=A, tag=tag or f"ellipsoid(diag~{np.round(np.diag(A), 6).tolist()})")

    @classmethod
    def perturbed(cls, matrix, harmonics, tag: str = ""):
        A = _spd(matrix)
        terms = []
        for item in harmonics:
            l, m, coef = (item["l"], item["m"], item["coef"]) if isinstance(item, dict) else item
            l, m, coef = int(l), int(m), float(coef)
            if l % 2 or l < 0 or abs(m) > l:
                raise InputError(f"harmonic (l={l}, m={m}) must have even l >= 0 and |m| <= l")
            terms.append((l, m, coef))
        by_degree = {}
        for l, m, coef in terms:
            by_degree.setdefault(l, []).append((m, coef))
        polys = tuple(HarmonicPolynomial(l, t) for l, t in sorted(by_degree.items()))
        return cls(
            "perturbed_ellipsoid",
            matrix=A,
            harmonics=tuple(terms),
            tag=tag or f"perturbed({', '.join(f'{l},{m}:{c:g}' for l, m, c in terms)})",
            _polys=polys,
        )

    def scaled(self, lam: float):
        """The body ``lam * self``."""
        if self.kind == "ball":
            return SupportBody.ball(lam * self.radius)
        if self.kind == "ellipsoid":
            return SupportBody.ellipsoid(lam * lam * self.matrix)
        return SupportBody.perturbed(lam * lam * self.matrix, [(l, m, lam * c) for l, m, c in self.harmonics])

    def rotated(self, R):
        """The body ``R @ self`` for a rotation matrix ``R``.

        Harmonic perturbations are not rotated term by term, so only ball and
        ellipsoid kinds are supported.
        """
        R = np.asarray(R, dtype=float)
        if self.kind == "ball":
            return self
        if self.kind == "ellipsoid":
            return SupportBody.ellipsoid(R @ self.matrix @ R.T)
        raise InputError("rotation of perturbed bodies is not supported")

    # -- evaluators on the 1-homogeneous extension ------------------------

    def h(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "ball":
            return self.radius * np.linalg.norm(y, axis=-1)
        Ay = y @ self.matrix
        val = np.sqrt(np.sum(y * Ay, axis=-1))
        for poly in self._polys:
            rho = np.linalg.norm(y, axis=-1)
            val = val + rho ** (1 - poly.degree) * poly.value(y)
        return val

    def grad(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "ball":
            return self.radius * y / np.linalg.norm(y, axis=-1, keepdims=True)
        Ay = y @ self.matrix
        out = Ay / np.sqrt(np.sum(y * Ay, axis=-1, keepdims=True))
        for poly in self._polys:
            l = poly.degree
            rho = np.linalg.norm(y, axis=-1, keepdims=True)
            P, dP = poly.jet(y, 1)
            out = out + (1 - l) * rho ** (-l - 1) * P[..., None] * y + rho ** (1 - l) * dP
        return out

    def hess(self, y):
        y = np.asarray(y, dtype=float)
        eye = np.eye(3)
        if self.kind == "ball":
            rho = np.linalg.norm(y, axis=-1)[..., None, None]
            return self.radius * (eye / rho - y[..., :, None] * y[..., None, :] / rho**3)
        Ay = y @ self.matrix
        hv = np.sqrt(np.sum(y * Ay, axis=-1))[..., None, None]
        out = self.matrix / hv - Ay[..., :, None] * Ay[..., None, :] / hv**3
        for poly in self._polys:
            l = poly.degree
            rho = np.linalg.norm(y, axis=-1)[..., None, None]
            P, dP, ddP = poly.jet(y, 2)
            P = P[..., None, None]
            yy = y[..., :, None] * y[..., None, :]
            cross = y[..., :, None] * dP[..., None, :] + dP[..., :, None] * y[..., None, :]
            out = (
                out
                + (1 - l) * (-l - 1) * rho ** (-l - 3) * P * yy
                + (1 - l) * rho ** (-l - 1) * (P * eye + cross)
                + rho ** (1 - l) * ddP
            )
        return out

    def curvature_radii(self, u):
        """Eigenvalues (ascending) of the Hessian restricted to ``u``-perp."""
        u = np.asarray(u, dtype=float)
        e1, e2 = tangent_basis(u)
        B = np.stack([e1, e2], axis=-1)
        H = self.hess(u)
        return np.linalg.eigvalsh(np.swapaxes(B, -1, -2) @ H @ B)

    # -- global quantities ------------------------------------------------

    @cached_property
    def extent(self):
        """``(min h, max h)`` over a dense sphere grid: inradius and circumradius."""
        if self.kind == "ball":
            return self.radius, self.radius
        vals = self.h(fibonacci_sphere(4000))
        return float(vals.min()), float(vals.max())

    @property
    def diameter(self):
        return 2.0 * self.extent[1]

    def gauge(self, y):
        """Minkowski functional of the body at ``y`` (scalar)."""
        y = as_point(y)
        if self.kind == "ball":
            return float(np.linalg.norm(y) / self.radius)
        if self.kind == "ellipsoid":
            return float(np.sqrt(y @ self._inverse @ y))
        return _gauge_newton(self, y)[0]

    def contact_normal(self, y):
        """Outer unit normal at the boundary point on the ray through ``y``."""
        y = as_point(y)
        if self.kind == "ball":
            return normalize(y)
        if self.kind == "ellipsoid":
            return normalize(self._inverse @ y)
        return _gauge_newton(self, y)[1]

    @cached_property
    def _inverse(self):
        return np.linalg.inv(self.matrix)

    def to_config(self):
        if self.kind == "ball":
            return {"kind": "ball", "radius": self.radius}
        cfg = {"kind": self.kind, "matrix": self.matrix.tolist()}
        if self.kind == "perturbed_ellipsoid":
            cfg["harmonics"] = [{"l": l, "m": m, "coef": c} for l, m, c in self.harmonics]
        return cfg


@dataclass(frozen=True, eq=False)
class BodyPair:
    """Outer body ``K`` supplying apexes and inner body ``L`` being probed."""

    outer: SupportBody
    inner: SupportBody

    def check_containment(self, n: int = 2000, margin: float = 0.0):
        """Raise unless the radial function of L stays below that of K."""
        dirs = fibonacci_sphere(n)
        worst = np.inf
        for d in dirs:
            gap = 1.0 / self.outer.gauge(d) - 1.0 / self.inner.gauge(d)
            worst = min(worst, gap)
        if not worst > margin:
            raise ValidationError(f"inner body is not inside the outer body (radial gap {worst:.3g})")
        return worst


def _spd(matrix):
    A = np.array(matrix, dtype=float)
    if A.shape != (3, 3) or not np.all(np.isfinite(A)):
        raise InputError("matrix must be a finite 3x3 array")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise InputError("matrix must be symmetric")
    A = 0.5 * (A + A.T)
    if np.linalg.eigvalsh(A)[0] <= 0:
        raise InputError("matrix must be positive definite")
    A.setflags(write=False)
    return A


def _gauge_newton(body, y, tol=1e-14, max_iter=50):
    # Solve grad h(w) = s*y, |w| = 1 for the contact normal w; gauge = 1/s.
    y = np.asarray(y, dtype=float)
    w = normalize(np.linalg.solve(body.matrix, y))
    s = 1.0 / np.sqrt(y @ np.linalg.solve(body.matrix, y))
    scale = np.linalg.norm(y) * s
    for _ in range(max_iter):
        F = np.append(body.grad(w) - s * y, 0.5 * (w @ w - 1.0))
        if np.max(np.abs(F)) < tol * max(scale, 1.0):
            break
        J = np.zeros((4, 4))
        J[:3, :3] = body.hess(w)
        J[:3, 3] = -y
        J[3, :3] = w
        step = np.linalg.solve(J, -F)
        w = w + step[:3]
        s = s + step[3]
    else:
        raise NumericError(f"gauge iteration did not converge at y={y.tolist()}")
    if s <= 0:
        raise NumericError(f"gauge iteration converged to the wrong branch at y={y.tolist()}")
    return 1.0 / s, normalize(w)


def support(body: SupportBody, u):
    """Support function value ``h(u)`` for unit ``u`` (scalar or batch)."""
    return body.h(as_direction(u))


def boundary_point(body: SupportBody, u):
    """Boundary point with outer normal ``u``, i.e. ``grad h(u)``."""
    return body.grad(as_direction(u))


def radial_point(body: SupportBody, u):
    """Boundary point on the ray from the origin in direction ``u``."""
    u = as_direction(u)
    if body.kind == "ball":
        return body.radius * u
    return u / body.gauge(u)


@dataclass
class ValidationReport:
    passed: bool
    grid_size: int
    symmetry_defect: float
    min_support: float
    euler_defect: float
    convexity_margin: float
    worst_direction: list
    failures: list

    def raise_if_failed(self):
        if not self.passed:
            raise ValidationError("; ".join(self.failures))
        return self

    def to_dict(self):
        return dict(self.__dict__)


def validate_body(body: SupportBody, grid_size: int = 40000, convexity_margin: float = 1e-6,
                  euler_tol: float = 1e-10, symmetry_tol: float = 1e-12):
    """Check symmetry, positivity, the Euler relation and strict convexity on a grid."""
    if grid_size < 100:
        raise InputError("grid_size must be at least 100")
    u = fibonacci_sphere(grid_size)
    h = body.h(u)
    sym = np.abs(h - body.h(-u))
    euler = np.abs(np.sum(u * body.grad(u), axis=-1) - h)
    radii = body.curvature_radii(u)[..., 0]
    failures = []
    if sym.max() > symmetry_tol:
        i = int(sym.argmax())
        failures.append(f"origin symmetry violated at u={u[i].tolist()} (|h(u)-h(-u)|={sym[i]:.3g})")
    if h.min() <= 0:
        i = int(h.argmin())
        failures.append(f"support not positive at u={u[i].tolist()} (h={h[i]:.3g})")
    if euler.max() > euler_tol:
        i = int(euler.argmax())
        failures.append(f"Euler relation violated at u={u[i].tolist()} (defect {euler[i]:.3g})")
    i = int(radii.argmin())
    if radii[i] < convexity_margin:
        failures.append(f"curvature margin {radii[i]:.6g} below {convexity_margin:g} at u={u[i].tolist()}")
    return ValidationReport(
        passed=not failures,
        grid_size=grid_size,
        symmetry_defect=float(sym.max()),
        min_support=float(h.min()),
        euler_defect=float(euler.max()),
        convexity_margin=float(radii[i]),
        worst_direction=u[i].tolist(),
        failures=failures,
    )


def body_from_config(cfg: dict) -> SupportBody:
    kind = cfg.get("kind")
    if kind == "ball":
        return SupportBody.ball(cfg["radius"], tag=cfg.get("tag", ""))
    if kind == "ellipsoid":
        return SupportBody.ellipsoid(cfg["matrix"], tag=cfg.get("tag", ""))
    if kind == "perturbed_ellipsoid":
        return SupportBody.perturbed(cfg["matrix"], cfg.get("harmonics", []), tag=cfg.get("tag", ""))
    raise InputError(f"unknown body kind {kind!r}; expected one of {KINDS}")


def load_body(path) -> SupportBody:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read body file {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InputError(f"body file {path} must hold a JSON object")
    cfg = {"tag": path.stem, **cfg}
    try:
        return body_from_config(cfg)
    except KeyError as exc:
        raise InputError(f"body file {path} is missing field {exc}") from exc
