"""Simplex search for bodies with planar grazes that are not ellipsoids.

The candidate inner body is an ellipsoid plus even solid harmonics.  The
objective is the worst graze planarity residual over a fixed apex grid,
plus a quadratic penalty that keeps the body at least ``floor`` away from
the ellipsoid family.  A vanishing objective with a positive ellipsoid
distance would be a numerical counterexample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .bodies import SupportBody, _spd, fibonacci_sphere, validate_body
from .errors import GrazeLabError, InputError
from .graze import graze_by_angle
from .harmonics import even_indices
from .harness import ApexGrid

OBJECTIVE_SAMPLES = 32
VALIDATION_GRID = 3000


@dataclass
class ShapeParams:
    base_matrix: np.ndarray
    coefficients: np.ndarray
    indices: tuple = field(default_factory=lambda: tuple(even_indices()))

    def __post_init__(self):
        self.base_matrix = _spd(self.base_matrix)
        self.coefficients = np.asarray(self.coefficients, dtype=float).reshape(-1)
        self.indices = tuple((int(l), int(m)) for l, m in self.indices)
        if len(self.coefficients) != len(self.indices):
            raise InputError(f"{len(self.coefficients)} coefficients for {len(self.indices)} harmonics")

    @classmethod
    def from_terms(cls, matrix, terms=(), degrees=(2, 4)):
        """Start point from sparse ``(l, m, coef)`` terms."""
        idx = even_indices(degrees)
        c = np.zeros(len(idx))
        for l, m, coef in terms:
            if (l, m) not in idx:
                raise InputError(f"harmonic ({l},{m}) is outside the index set {degrees}")
            c[idx.index((l, m))] += coef
        return cls(np.asarray(matrix, dtype=float), c, tuple(idx))

    def with_coefficients(self, c):
        return ShapeParams(self.base_matrix, c, self.indices)

    def body(self, tag="candidate"):
        terms = [(l, m, float(c)) for (l, m), c in zip(self.indices, self.coefficients) if c != 0.0]
        if not terms:
            return SupportBody.ellipsoid(self.base_matrix, tag)
        return SupportBody.perturbed(self.base_matrix, terms, tag)

    def to_dict(self):
        return {
            "base_matrix": self.base_matrix.tolist(),
            "harmonics": [{"l": l, "m": m, "coef": float(c)} for (l, m), c in zip(self.indices, self.coefficients)],
        }


def moment_planarity(points) -> float:
    """Out-of-plane RMS over twice the in-plane RMS radius, from second moments.

    For a circle the scale is its diameter.  With equal-angle samples the
    moments are periodic trapezoid sums, so the value does not depend on the
    sampling phase.
    """
    P = np.asarray(points, dtype=float)
    Q = P - P.mean(axis=0)
    lam, vec = np.linalg.eigh(Q.T @ Q / len(Q))
    # project rather than take sqrt(lam[0]), which would amplify round-off
    off = Q @ vec[:, 0]
    return float(np.sqrt(np.mean(off**2)) / (2 * np.sqrt(lam[1] + lam[2])))


def planarity_objective(params: ShapeParams, pair_outer: SupportBody, grid: ApexGrid,
                        samples=OBJECTIVE_SAMPLES) -> float:
    """Worst graze planarity over ``grid``; ``inf`` if the body is invalid."""
    body = params.body()
    if not validate_body(body, grid_size=VALIDATION_GRID).passed:
        return math.inf
    try:
        grid.check_exterior(body)
        return max(moment_planarity(graze_by_angle(body, x, samples).points) for x in grid.apexes)
    except GrazeLabError:
        return math.inf


def ellipsoid_distance(params: ShapeParams, grid_size: int = 2000) -> float:
    """Normalized RMS misfit of ``h(u)**2 ~ u^T B u`` over a Fibonacci grid."""
    u = fibonacci_sphere(grid_size)
    h2 = params.body().h(u) ** 2
    design = np.column_stack([u[:, 0] ** 2, u[:, 1] ** 2, u[:, 2] ** 2,
                              2 * u[:, 0] * u[:, 1], 2 * u[:, 0] * u[:, 2], 2 * u[:, 1] * u[:, 2]])
    coef, *_ = np.linalg.lstsq(design, h2, rcond=None)
    misfit = h2 - design @ coef
    return float(np.sqrt(np.mean(misfit**2)) / np.sqrt(np.mean(h2**2)))


@dataclass
class SearchTrace:
    iterations: list
    best: ShapeParams
    best_objective: float
    ellipsoid_distance: float
    initial_ellipsoid_distance: float
    converged: bool
    seed: int

    def lines(self):
        for rec in self.iterations:
            yield json.dumps(_finite(rec), sort_keys=True)

    def write(self, path):
        with open(path, "w") as fh:
            for line in self.lines():
                fh.write(line + "\n")


def _finite(obj):
    # JSON has no inf/nan
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def search_counterexample(outer: SupportBody, start: ShapeParams, budget: int = 500, seed: int = 42, *,
                          floor: float = 0.0, grid: ApexGrid | None = None, apex_count: int = 8,
                          simplex_scale: float = 0.01, samples=OBJECTIVE_SAMPLES) -> SearchTrace:
    """Nelder-Mead on the penalized planarity objective.

    The penalty is ``((floor - d) / floor)**2`` when the ellipsoid distance
    ``d`` drops below ``floor``, so reaching the ellipsoid family costs 1,
    far above any planarity residual.  Runs exactly as many objective
    evaluations as scipy needs up to ``budget``.
    """
    if budget < 100:
        raise InputError("budget must be at least 100")
    if floor < 0:
        raise InputError("floor must be non-negative")
    if grid is None:
        grid = ApexGrid.on(outer, apex_count, seed=seed, include_axes=False)
    rng = np.random.default_rng(seed)
    x0 = start.coefficients.copy()
    n = len(x0)
    simplex = np.vstack([x0, x0 + simplex_scale * rng.standard_normal((n, n))])

    records = []
    best = [math.inf, x0]

    def cost(c):
        params = start.with_coefficients(c)
        phi = planarity_objective(params, outer, grid, samples)
        dist = ellipsoid_distance(params) if math.isfinite(phi) else math.inf
        total = phi
        if floor > 0 and dist < floor:
            total = phi + ((floor - dist) / floor) ** 2
        if total < best[0]:
            best[0], best[1] = total, np.array(c, dtype=float)
        records.append({
            "iter": len(records),
            "objective": total,
            "planarity": phi,
            "ellipsoid_distance": dist,
            "best_objective": best[0],
            "params": params.to_dict(),
        })
        return total

    res = minimize(cost, x0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "maxfev": budget, "maxiter": budget,
                            "xatol": 1e-10, "fatol": 1e-12, "adaptive": False})
    best_params = start.with_coefficients(best[1])
    return SearchTrace(
        iterations=records,
        best=best_params,
        best_objective=best[0],
        ellipsoid_distance=ellipsoid_distance(best_params),
        initial_ellipsoid_distance=ellipsoid_distance(start),
        converged=bool(res.success),
        seed=seed,
    )
