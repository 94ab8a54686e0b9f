"""Spectral solver for the axisymmetric intensity problem with data close to a geomagnetic dipole.

The names re-exported here are the usual entry points; see the submodules for the rest.
"""
__version__ = "0.1.0"

from .backus import BackusConfig, BackusResult, solve_backus
from .oblique import solve_oblique_axisym, solve_oblique_general
from .spectral import AxisymCoeffs, SphCoeffs

__all__ = [
    "__version__",
    "AxisymCoeffs",
    "SphCoeffs",
    "BackusConfig",
    "BackusResult",
    "solve_backus",
    "solve_oblique_axisym",
    "solve_oblique_general",
]
