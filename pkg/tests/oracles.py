"""Closed-form reference values used by the tests.

Nothing here calls the package's continuation or fitting code: the sphere
cases are elementary, and ellipsoid cases are linear images of the unit
sphere case (tangency is preserved by linear maps).
"""

import numpy as np
from scipy.linalg import sqrtm


def circle(center, normal, radius, n=400):
    normal = np.asarray(normal, float) / np.linalg.norm(normal)
    helper = np.array([1.0, 0, 0]) if abs(normal[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(normal, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    t = 2 * np.pi * np.arange(n) / n
    return np.asarray(center, float) + radius * (np.outer(np.cos(t), e1) + np.outer(np.sin(t), e2))


def sphere_graze(r, x, n=400):
    """Contact circle of tangent lines from ``x`` to the sphere of radius ``r``."""
    x = np.asarray(x, float)
    d = np.linalg.norm(x)
    return circle(r * r / (d * d) * x, x, r * np.sqrt(1 - r * r / (d * d)), n)


def unit_sphere_omega(z, n=400):
    """Both cones from ``z`` and ``-z`` to the unit sphere meet in this circle in ``z``-perp."""
    rho = np.linalg.norm(z)
    return circle(np.zeros(3), z, rho / np.sqrt(rho * rho - 1), n)


def ellipsoid_graze(A, x, n=400):
    S = np.real(sqrtm(A))
    z = np.linalg.solve(S, x)
    return sphere_graze(1.0, z, n) @ S.T


def ellipsoid_omega(A, x, n=400):
    S = np.real(sqrtm(A))
    z = np.linalg.solve(S, x)
    return unit_sphere_omega(z, n) @ S.T


def brute_hausdorff(a, b):
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def ellipse(center, a, b, angle=0.0, n=400):
    t = 2 * np.pi * np.arange(n) / n
    c, s = np.cos(angle), np.sin(angle)
    xy = np.column_stack([a * np.cos(t), b * np.sin(t)]) @ np.array([[c, s], [-s, c]])
    return np.column_stack([xy + np.asarray(center[:2], float), np.full(n, center[2] if len(center) > 2 else 0.0)])
