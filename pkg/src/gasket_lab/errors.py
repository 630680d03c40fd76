"""Exception hierarchy shared by every module.

The CLI maps these onto its exit codes, so keep the split between usage
problems and numerical trouble intact.
"""


class GasketLabError(Exception):
    """Base class for all errors raised by gasket_lab."""


class SpecError(GasketLabError, ValueError):
    """Invalid model parameters (family, dimension, side, level)."""


class GuardExceeded(GasketLabError, MemoryError):
    """A construction or solve would exceed the configured size guard."""


class DisconnectedError(GasketLabError, ValueError):
    """Nodes that must communicate lie in different components."""


class NumericalFailure(GasketLabError, ArithmeticError):
    """A linear solve or eigen-solve failed its accuracy check."""


class NonConvergenceError(NumericalFailure):
    """An iteration hit its budget; ``last`` carries the final iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class OrbitAsymmetryError(NumericalFailure):
    """Traced conductances within one symmetry class disagree."""


class ResolutionError(GasketLabError, ValueError):
    """A requested time falls below the walk's temporal resolution."""
