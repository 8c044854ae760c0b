"""Isogeometric collocation boundary element method for the Helmholtz equation.

Multipatch NURBS geometries, spline discretization spaces, quasi-interpolation
based quadrature with singularity extraction, collocation assembly, field
post-processing and benchmark problems.
"""
from .assembly import QuadratureConfig, assemble, c_diagnostic, solve
from .geometry import MultiPatchSurface, NurbsPatch, sphere, torus
from .post import BoundaryProblem, BoundarySolution, evaluate_field, far_field, l2_relative_error
from .space import build_space, collocation_points

__all__ = [
    "BoundaryProblem", "BoundarySolution", "MultiPatchSurface", "NurbsPatch", "QuadratureConfig",
    "assemble", "build_space", "c_diagnostic", "collocation_points", "evaluate_field", "far_field",
    "l2_relative_error", "solve", "sphere", "torus",
]
__version__ = "0.1.0"
