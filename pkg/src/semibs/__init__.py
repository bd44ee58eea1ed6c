"""Semiclassical spectra of one-dimensional potential wells.

Computes the discrete spectrum of -h^2 d^2/dx^2 + V (and symbols with
lower-order corrections p1, p2) through second order in h, verifies the
result against an independent Numerov eigenvalue solver, and realizes the
cutoff-commutator (flux-norm) machinery on a grid.
"""

from .exprjet import ExprDomainError, ExprSyntaxError, evaluate, parse
from .oracle import OracleConfig, oracle_spectrum
from .orbit import trace_orbit, turning_points
from .actions import ActionSeries, action_series
from .quantize import (GramEval, SpectrumTable, bs_solve, convergence_fit,
                       gram_det, gram_scan)
from .symbols import (EnergyWindow, HamiltonianSymbol, builtin,
                      from_potential, validate_well)

__version__ = "0.1.0"

__all__ = [
    "ActionSeries", "EnergyWindow", "ExprDomainError", "ExprSyntaxError",
    "GramEval", "HamiltonianSymbol", "OracleConfig", "SpectrumTable",
    "action_series", "bs_solve", "builtin", "convergence_fit", "evaluate",
    "from_potential", "gram_det", "gram_scan", "oracle_spectrum", "parse",
    "trace_orbit", "turning_points", "validate_well", "__version__",
]
