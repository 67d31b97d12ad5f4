"""Generalized block qd-algorithm for block Hessenberg eigenvalue problems.

The matrix is given in factored form ``J = L^(0) ... L^(theta-1) R^(0)`` with
unit lower bidiagonal block factors ``L`` and an upper bidiagonal ``R``; the
iteration is the truncated discrete non-commutative hungry Toda-II lattice.
"""

from .blockmat import BlockGrid, LowerFactor, UpperFactor, assemble_j, grid_trace
from .eigs import small_eigenvalues
from .errors import BlockQDError, Breakdown, DimensionError, NoConvergence, Singular, SingularMinor
from .lattice import TodaIIState, TodaIState, toda1_step, toda2_step
from .problem import ProblemFile, load_example
from .qdalgo import ConvergenceStatus, HungryState, Spectrum, SweepTrace, extract_spectrum, run, sweep
from .quasidet import quasidet, solve_left

__version__ = "0.1.0"

__all__ = [
    "BlockGrid",
    "BlockQDError",
    "Breakdown",
    "ConvergenceStatus",
    "DimensionError",
    "HungryState",
    "LowerFactor",
    "NoConvergence",
    "ProblemFile",
    "Singular",
    "SingularMinor",
    "Spectrum",
    "SweepTrace",
    "TodaIIState",
    "TodaIState",
    "UpperFactor",
    "assemble_j",
    "extract_spectrum",
    "grid_trace",
    "load_example",
    "quasidet",
    "run",
    "small_eigenvalues",
    "solve_left",
    "sweep",
    "toda1_step",
    "toda2_step",
]
