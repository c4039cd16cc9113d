"""Radial bilaplacian problems with singular or vanishing potentials.

Submodules: ``exponents`` (admissible exponent windows), ``grid`` (radial
discretization and norms), ``energy`` (the Euler functional), ``solve``
(minimization and mountain pass), ``verify`` (decay bounds and embedding
estimates) and ``cli``.
"""

from .exponents import GrowthParams, power_law_report, certify_pair
from .grid import DimensionContext, build_grid, HVGram, RadialField
from .energy import NonlinearitySpec, PotentialSpec, power_law_potential, energy, gradient
from .solve import SolverConfig, SolveResult, minimize, mountain_pass

__version__ = "0.1.0"

__all__ = [
    "GrowthParams",
    "power_law_report",
    "certify_pair",
    "DimensionContext",
    "build_grid",
    "HVGram",
    "RadialField",
    "NonlinearitySpec",
    "PotentialSpec",
    "power_law_potential",
    "energy",
    "gradient",
    "SolverConfig",
    "SolveResult",
    "minimize",
    "mountain_pass",
]
