"""Functional calculus on finite-grid vector lattices.

Evaluate positively homogeneous functions of lattice elements three ways
(pointwise, as a supremum or infimum of supporting hyperplanes, and as a
dyadic approximation sequence), build towers of lattices closed under such
functions, and check how lattice homomorphisms interact with them.
"""

from .angles import AngleTuple, DyadicGrid, dyadic_grid, sphere_coefficients
from .calculus import (SigmaTrace, boxplus, boxtimes, complex_modulus,
                       pointwise_apply, s_theta_combination, sigma_sequence,
                       sphere_sup, support_formula, weighted_product_inf)
from .errors import (ExpressionTooLargeError, HypothesisError,
                     LatticeMismatchError, NonDifferentiableError, ParseError)
from .homogeneous import (Curvature, HomogeneousFn, certify_curvature,
                          euclidean_norm, finite_difference_gradient, gini,
                          gradient_at, pth_power_mean, register,
                          sample_delta_h, scaled_geometric_mean, stolarsky)
from .lattice import (ConvergenceReport, Element, GridLattice, Regulator,
                      abs_value, check_ru_cauchy, check_ru_convergence,
                      lattice_inf, lattice_sup, positive_part)
from .names import parse_mean_spec
from .parsing import format_expr, parse_expr

__version__ = "0.1.0"

__all__ = [
    "AngleTuple",
    "DyadicGrid",
    "dyadic_grid",
    "sphere_coefficients",
    "SigmaTrace",
    "boxplus",
    "boxtimes",
    "complex_modulus",
    "pointwise_apply",
    "s_theta_combination",
    "sigma_sequence",
    "sphere_sup",
    "support_formula",
    "weighted_product_inf",
    "ExpressionTooLargeError",
    "HypothesisError",
    "LatticeMismatchError",
    "NonDifferentiableError",
    "ParseError",
    "Curvature",
    "HomogeneousFn",
    "certify_curvature",
    "euclidean_norm",
    "finite_difference_gradient",
    "gini",
    "gradient_at",
    "pth_power_mean",
    "register",
    "sample_delta_h",
    "scaled_geometric_mean",
    "stolarsky",
    "ConvergenceReport",
    "Element",
    "GridLattice",
    "Regulator",
    "abs_value",
    "check_ru_cauchy",
    "check_ru_convergence",
    "lattice_inf",
    "lattice_sup",
    "positive_part",
    "parse_mean_spec",
    "format_expr",
    "parse_expr",
]
