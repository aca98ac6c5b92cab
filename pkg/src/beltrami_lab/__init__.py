"""Spectral tools for the Beltrami equation on a periodic grid.

Fourier multipliers (Beurling, Cauchy, fractional derivatives), a Neumann
series solver for the principal solution, Triebel-Lizorkin/Besov norm
estimators and a refinement harness for regularity probes.
"""

__version__ = "0.1.0"

from ._ext import BACKEND
from .grid import Grid, GridField, make_grid, read_bfld, write_bfld
from .solver import (
    BeltramiCoefficients,
    PrincipalSolution,
    SolverConfig,
    commutator,
    identity_residual,
    lifted_derivative_split,
    solve,
    validate_coefficients,
)
from .spectral import (
    MultiplierSpec,
    beurling,
    cauchy,
    fractional_derivative,
    mollify,
)

__all__ = [
    "BACKEND",
    "BeltramiCoefficients",
    "Grid",
    "GridField",
    "MultiplierSpec",
    "PrincipalSolution",
    "SolverConfig",
    "beurling",
    "cauchy",
    "commutator",
    "fractional_derivative",
    "identity_residual",
    "lifted_derivative_split",
    "make_grid",
    "mollify",
    "read_bfld",
    "solve",
    "validate_coefficients",
    "write_bfld",
]
