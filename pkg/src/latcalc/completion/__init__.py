"""Expression towers, normal forms and extensions of maps."""

from .certify import (INCONCLUSIVE, NOT_COMPLETE, CompletenessCertificate,
                      certify_not_h_complete, second_differences)
from .expr import (Add, Apply, Expr, Gen, Inf, Scale, Sup, eval_expr,
                   max_generator, random_expr)
from .maps import (ConverseReport, LinearMapRep, PreservationReport,
                   check_converse, check_modulus_hypothesis, check_preservation,
                   extend_homomorphism, extend_positive_map_by_limits)
from .normal_form import InfSupForm, normalize
from .tower import Tower, build_tower, check_closed, closure_step, seed_tower

__all__ = [
    "Add", "Apply", "CompletenessCertificate", "ConverseReport", "Expr", "Gen",
    "INCONCLUSIVE", "Inf", "InfSupForm", "LinearMapRep", "NOT_COMPLETE",
    "PreservationReport", "Scale", "Sup", "Tower", "build_tower",
    "certify_not_h_complete", "check_closed", "check_converse",
    "check_modulus_hypothesis", "check_preservation", "closure_step",
    "eval_expr", "extend_homomorphism", "extend_positive_map_by_limits",
    "max_generator", "normalize", "random_expr", "second_differences",
    "seed_tower",
]
