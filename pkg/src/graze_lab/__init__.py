"""Numerical experiments on grazes (contact curves of support cones) of convex bodies."""

from .bodies import BodyPair, SupportBody, load_body, validate_body
from .curves import ClosedCurve, fit_conic, fit_plane
from .errors import ApexError, GrazeLabError, InputError, NumericError, ValidationError
from .graze import cone_membership, graze_by_angle, line_misses_body, trace_graze, trace_omega
from .harness import (
    ApexGrid,
    LemmaReport,
    certify_ellipsoid,
    check_almost_free,
    verify_ball_remark,
    verify_lemma1,
    verify_lemma2,
    verify_lemma3,
    verify_theorem_construction,
)
from .search import ShapeParams, ellipsoid_distance, planarity_objective, search_counterexample

__all__ = [
    "ApexError", "ApexGrid", "BodyPair", "ClosedCurve", "GrazeLabError", "InputError", "LemmaReport",
    "NumericError", "ShapeParams", "SupportBody", "ValidationError", "certify_ellipsoid", "check_almost_free",
    "cone_membership", "ellipsoid_distance", "graze_by_angle", "fit_conic", "fit_plane", "line_misses_body", "load_body",
    "planarity_objective", "search_counterexample", "trace_graze", "trace_omega", "validate_body",
    "verify_ball_remark", "verify_lemma1", "verify_lemma2", "verify_lemma3", "verify_theorem_construction",
]
