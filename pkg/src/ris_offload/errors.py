"""Exception taxonomy shared across the package."""


class RisOffloadError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(RisOffloadError):
    """Invalid scenario, experiment, or CLI configuration."""


class InfeasibleAllocationError(RisOffloadError):
    """A bandwidth allocation that cannot serve an offloading user."""


class DimensionMismatchError(RisOffloadError):
    """Vector or matrix dimensions inconsistent with the lift layout."""


class SdpError(RisOffloadError):
    """Base class for semidefinite-solver failures."""


class SdpInfeasibleError(SdpError):
    """The SDP carries a primal infeasibility certificate."""


class SdpUnboundedError(SdpError):
    """The SDP carries a dual infeasibility (unboundedness) certificate."""


class SdpNonConvergenceError(SdpError):
    """Iteration limit hit before tolerances were met.

    Carries the best iterate and its residuals so callers can inspect
    how far the solve got.
    """

    def __init__(self, message, best_matrix=None, residuals=None):
        super().__init__(message)
        self.best_matrix = best_matrix
        self.residuals = residuals or {}


class DegenerateSolutionError(RisOffloadError):
    """Homogenizer entry of a solution matrix is numerically zero."""


class BisectionNonConvergenceError(RisOffloadError):
    """Bisection hit its iteration cap; carries the final bracket."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class EnumerationLimitError(RisOffloadError):
    """Brute-force enumeration refused: user count exceeds the guard."""
