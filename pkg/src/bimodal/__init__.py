"""Two-mode cavity QED engine: a single V-type atom coupled to two quantized
cavity modes, with dual incoherent pumping and dual coherent drives.

Steady states, photon statistics, two-time correlations and their spectra,
and a two-mode inseparability witness, all from one Lindblad generator.
"""

__version__ = "0.1.0"

from .errors import (
    BimodalError,
    ConfigError,
    DegenerateSteadyStateError,
    DimensionMismatchError,
    NonConvergenceError,
    PhysicalityError,
    SolverError,
)
from .hilbert import AtomicLevel, BasisState, HilbertSpace, build_space
from .model import ModelParams, build_liouvillian

__all__ = [
    "AtomicLevel",
    "BasisState",
    "BimodalError",
    "ConfigError",
    "DegenerateSteadyStateError",
    "DimensionMismatchError",
    "HilbertSpace",
    "ModelParams",
    "NonConvergenceError",
    "PhysicalityError",
    "SolverError",
    "build_liouvillian",
    "build_space",
    "__version__",
]
