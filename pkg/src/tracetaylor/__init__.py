"""Finite-dimensional trace expansions for spectral functions.

Taylor expansions of V -> tr f(H0 + V) for Hermitian matrices: confluent
divided differences, multiple operator integrals as spectral sums, remainder
estimates with explicit constants, and spectral-shift trace formulas.
"""

from .operator_core import (HermitianOperator, Interval, SpectralDecomposition,
                            decompose)
from .scalar_functions import (SmoothCompactFunction, make_plateau_bump,
                               make_poly_bump)

__all__ = [
    "HermitianOperator",
    "Interval",
    "SpectralDecomposition",
    "SmoothCompactFunction",
    "decompose",
    "make_plateau_bump",
    "make_poly_bump",
]

__version__ = "0.1.0"
