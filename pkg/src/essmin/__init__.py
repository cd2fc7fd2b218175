"""Certified two-sided bounds on essential minima of Green-function heights.

The package computes brackets [lower, upper] around ess(Ht_g), the smallest
limit point of the height attached to a Green function g on the complex
plane.  Lower bounds come from dual certificates (rational-weighted integer
polynomials) whose pointwise infimum is certified by interval branch and
bound; upper bounds come from explicit measures integrated by adaptive
quadrature.  Weak duality makes every recorded pair a true bracket.
"""

from . import (
    cli,
    driver,
    greens,
    intervals,
    intpoly,
    lowerbound,
    measures,
    modular,
    roots,
    upperbound,
)
from .driver import BoundsLedger, RunConfig, run
from .greens import CompositeSpec, GreenFunction, builtin, make_composite
from .intpoly import IntPoly, parse_poly
from .lowerbound import DualCertificate, certified_inf, exchange_solve
from .upperbound import PrimalWitness, search

__version__ = "0.1.0"

__all__ = [
    "BoundsLedger",
    "CompositeSpec",
    "DualCertificate",
    "GreenFunction",
    "IntPoly",
    "PrimalWitness",
    "RunConfig",
    "builtin",
    "certified_inf",
    "cli",
    "driver",
    "exchange_solve",
    "greens",
    "intervals",
    "intpoly",
    "lowerbound",
    "make_composite",
    "measures",
    "modular",
    "parse_poly",
    "roots",
    "run",
    "search",
    "upperbound",
    "__version__",
]
