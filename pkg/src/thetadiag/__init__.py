"""Verification workbench for theta characteristics, theta constants, and
their near-diagonal expansions.

Modules:
    chars  -- exact combinatorics of characteristics and fundamental systems
    symp   -- the mod-2 symplectic group action and orbit enumeration
    theta  -- certified numerical evaluation of theta functions
    expand -- exact bracket-polynomial expansions and slope-fit verifiers
    loci   -- locus detectors and numerical theorem verifiers
    cli    -- command-line entry point producing machine-readable reports
"""

from .chars import (
    EVEN,
    ODD,
    Characteristic,
    enumerate_characteristics,
    even_count,
    is_azygetic_triple,
    is_even,
    odd_count,
    parity,
    scalar_class,
    special_fundamental_system,
)
from .expand import (
    BracketPolynomial,
    SlopeReport,
    bracket,
    fit_slope,
    grad_leading,
    hessian_minor,
    theta_leading,
    vanishing_order,
)
from .symp import SpMod2Element, act, group_generators, orbit, verify_transitivity
from .theta import PeriodMatrix, eval_theta, gradient, hessian, tau_gradient

__version__ = "0.1.0"

__all__ = [
    "EVEN",
    "ODD",
    "Characteristic",
    "enumerate_characteristics",
    "even_count",
    "is_azygetic_triple",
    "is_even",
    "odd_count",
    "parity",
    "scalar_class",
    "special_fundamental_system",
    "BracketPolynomial",
    "SlopeReport",
    "bracket",
    "fit_slope",
    "grad_leading",
    "hessian_minor",
    "theta_leading",
    "vanishing_order",
    "SpMod2Element",
    "act",
    "group_generators",
    "orbit",
    "verify_transitivity",
    "PeriodMatrix",
    "eval_theta",
    "gradient",
    "hessian",
    "tau_gradient",
    "__version__",
]
