"""Isogeometric analysis on polar domains with corners."""

from .analysis import (
    ConvergenceReport,
    ManufacturedProblem,
    convergence_study,
    error_norms,
    grading_parameter,
    lshape_problem,
    pacman_problem,
)
from .geometry import PolarPatch, load_patch, make_circular_sector, make_l_shape, save_patch
from .mesh import BezierMesh, build_mesh, quasi_uniformity_report, split_domain
from .polar_space import PolarSplineSpace, build_space
from .solver import DiscreteSolution, QuadratureRule, assemble, apply_dirichlet, solve, solve_poisson
from .splines import DualBasis, KnotVector, graded_refine, make_open_knot_vector, uniform_refine

__all__ = [
    "BezierMesh", "ConvergenceReport", "DiscreteSolution", "DualBasis", "KnotVector",
    "ManufacturedProblem", "PolarPatch", "PolarSplineSpace", "QuadratureRule",
    "apply_dirichlet", "assemble", "build_mesh", "build_space", "convergence_study",
    "error_norms", "grading_parameter", "graded_refine", "load_patch", "lshape_problem",
    "make_circular_sector", "make_l_shape", "make_open_knot_vector", "pacman_problem",
    "quasi_uniformity_report", "save_patch", "solve", "solve_poisson", "split_domain",
    "uniform_refine",
]
