"""Bifurcation points of periodic non-autonomous one-dimensional map systems."""

from .bifurcation import (
    BifurcationPoint,
    Singularity,
    SolveConfig,
    classify_singularity,
    exact_point,
    nondegeneracy,
    residual,
    solve,
    transversality,
)
from .expr import evaluate, parse, to_text
from .invariance import (
    a3_exclusion,
    contact_order_diagnostic,
    schwarzian,
    schwarzian_product_check,
    verify,
)
from .numeric import Grad, Jet, bruno_compose, jet_compose
from .strata import cobweb_data, trace_strata
from .system import PeriodicSystem, classify_hyperbolicity, composition_jet, fiber_points, orbit, rotate

__version__ = "0.1.0"

__all__ = [
    "BifurcationPoint", "Grad", "Jet", "PeriodicSystem", "Singularity", "SolveConfig",
    "a3_exclusion", "bruno_compose", "classify_hyperbolicity", "classify_singularity", "cobweb_data",
    "composition_jet", "contact_order_diagnostic", "evaluate", "exact_point", "fiber_points",
    "jet_compose", "nondegeneracy", "orbit", "parse", "residual", "rotate", "schwarzian",
    "schwarzian_product_check", "solve", "to_text", "trace_strata", "transversality", "verify",
]
