"""Affine, homothetic and Killing symmetries of static plane symmetric
spacetimes ds^2 = -e^{nu(x)} dt^2 + dx^2 + e^{mu(x)} (dy^2 + dz^2)."""

from .catalog import AffineBasis, algebra_summary, generator_catalog
from .classifier import CaseLabel, CaseReport, case_expectations, classify
from .exprcore import Expr, parse
from .geodesic import affine_map_check, flow, integrate_geodesic
from .geometry import MetricFamily, VectorField, christoffel, riemann
from .symmetry import FieldClass, affine_residual, classify_field, decompose_hF

__version__ = "0.1.0"

__all__ = [
    "AffineBasis",
    "CaseLabel",
    "CaseReport",
    "Expr",
    "FieldClass",
    "MetricFamily",
    "VectorField",
    "affine_map_check",
    "affine_residual",
    "algebra_summary",
    "case_expectations",
    "christoffel",
    "classify",
    "classify_field",
    "decompose_hF",
    "flow",
    "generator_catalog",
    "integrate_geodesic",
    "parse",
    "riemann",
]
