"""Exception types shared across the package."""


class RoachLabError(Exception):
    """Base class for all package-specific failures."""


class DomainError(RoachLabError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class DegenerateStateError(RoachLabError):
    """p(v) + q(v) vanished where a positive total switching rate is required."""


class ConfigError(RoachLabError, ValueError):
    """A run configuration is malformed or violates a constraint."""


class BlowUpError(RoachLabError):
    """Time integration produced a non-finite field."""

    def __init__(self, message: str, t_last_good: float):
        super().__init__(message)
        self.t_last_good = t_last_good


class PositivityError(RoachLabError):
    """A density dropped below the tolerated negativity floor."""

    def __init__(self, message: str, t_last_good: float):
        super().__init__(message)
        self.t_last_good = t_last_good


class NoConvergenceError(RoachLabError):
    """Newton iteration failed to reach the residual tolerance."""

    def __init__(self, message: str, best_residual: float = float("nan")):
        super().__init__(message)
        self.best_residual = best_residual


class StuckBranchError(RoachLabError):
    """Continuation step size underflowed; carries the partial branch."""

    def __init__(self, message: str, branch=None):
        super().__init__(message)
        self.branch = branch


class RefinementNeededError(RoachLabError):
    """An event bracket contains multiple crossings; smaller steps required."""


class EigenSolverError(RoachLabError):
    """Eigenvalue iteration stagnated or returned unusable results."""


class FitError(RoachLabError, ValueError):
    """Slope fitting received unusable data (e.g. nonpositive values)."""


class AlignmentError(RoachLabError):
    """Branches to be compared do not share a parameter window."""
