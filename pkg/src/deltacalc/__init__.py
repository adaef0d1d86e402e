"""Ladder-operator algebra, truncated Fock numerics and stochastic harnesses.

Submodules:

``opalg``      normal ordering, conjugation, delta-derivatives and integrals
``fock``       matrices on the truncated Fock space, Gibbs/GNS, Hermite functions
``dynamics``   state and operator evolution, action and residual diagnostics
``liouville``  Liouvillian tensors, divergence, currents, boundary checks
``finance``    path ensembles, Ito-type decompositions, generator estimates
``cli``        the ``deltacalc`` command
"""

from .expr import A, ADAG, P, Q, OpExpr
from .fock import FockMatrix, TruncationError, materialize
from .opalg import (
    AntiNormalPoly,
    NormalPoly,
    Var,
    anti_normal_order,
    commutator,
    delta_deriv,
    delta_integral,
    hermitian_conjugate,
    normal_order,
)
from .parser import ParseError, parse

__version__ = "0.1.0"

__all__ = [
    "A",
    "ADAG",
    "P",
    "Q",
    "OpExpr",
    "FockMatrix",
    "TruncationError",
    "materialize",
    "AntiNormalPoly",
    "NormalPoly",
    "Var",
    "anti_normal_order",
    "commutator",
    "delta_deriv",
    "delta_integral",
    "hermitian_conjugate",
    "normal_order",
    "ParseError",
    "parse",
]
