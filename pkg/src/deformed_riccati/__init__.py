"""Resonances of Friedrichs-type block operators via deformed Riccati equations."""

from .blockdiag import contour_independence, discretize_block_operator, verify_diagonalization
from .contour import (Contour, admissibility, build_contour, polyline, region_membership,
                      sample_contour, semi_ellipse)
from .model import FriedrichsModel, Interval, MatrixPolynomial, validate_model
from .schur import det_zero_oracle, resonances, schur_complement, verify_factorization
from .solver import riccati_solution_x, riccati_solution_y, solve_operator_root

__version__ = "0.1.0"

__all__ = [
    "Contour", "FriedrichsModel", "Interval", "MatrixPolynomial", "admissibility",
    "build_contour", "contour_independence", "det_zero_oracle", "discretize_block_operator",
    "polyline", "region_membership", "resonances", "riccati_solution_x", "riccati_solution_y",
    "sample_contour", "schur_complement", "semi_ellipse", "solve_operator_root",
    "validate_model", "verify_diagonalization", "verify_factorization",
]
