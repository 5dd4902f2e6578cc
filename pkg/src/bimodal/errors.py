"""Exception hierarchy shared across the engine.

The CLI maps these onto distinct exit codes, so new failure kinds should
subclass one of the two branches (config vs. solver) rather than adding
top-level exceptions.
"""


class BimodalError(Exception):
    """Base class for all engine errors."""


class ConfigError(BimodalError):
    """Invalid parameters, truncations, frames, config files or CLI input."""


class DimensionMismatchError(ConfigError):
    """Operands live on different Hilbert spaces."""


class SolverError(BimodalError):
    """Numerical failure in a solve or propagation."""


class NonConvergenceError(SolverError):
    """Solver exhausted its budget; carries the best residual reached."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (best residual {residual:.3e})")
        self.residual = residual


class DegenerateSteadyStateError(SolverError):
    """Two near-null directions detected; the steady state is ambiguous."""


class PhysicalityError(SolverError):
    """Returned state failed a Hermiticity / trace / positivity gate."""


class StiffnessError(SolverError):
    """Propagator step size underflowed."""


class VacuumModeError(SolverError):
    """Correlation requested for a mode with no photons (0/0 guard)."""
