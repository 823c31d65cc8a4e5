"""Exact deformation calculus for holomorphic Poisson families."""
from .exactalg import LPoly, ParamJet, RatFn, Rat, differentiate, jet_combine, substitute
from .multivector import (ChartMap, Multivector, jacobi_defect, poisson_map_residual, pushforward,
                          schouten, wedge)
from .parse import parse_expression

__all__ = ["ChartMap", "LPoly", "Multivector", "ParamJet", "Rat", "RatFn", "differentiate", "jacobi_defect",
           "jet_combine", "parse_expression", "poisson_map_residual", "pushforward", "schouten", "substitute",
           "wedge"]

__version__ = "0.1.0"
