"""Exception hierarchy.

Every numerical failure that marks a phase point as lying outside the
generic stratum is reported through one of these, never silently.
"""


class SpinCMError(Exception):
    """Base class for all library errors."""


class NumericFailure(SpinCMError):
    """A computation could not be completed at the requested accuracy."""


class NearDegenerateSpectrum(NumericFailure):
    """Two eigenvalues are closer than the configured separation threshold."""


class NoConvergence(NumericFailure):
    """An iterative kernel failed to converge."""


class DecompositionFails(NumericFailure):
    """A pivot minor of the Gaussian decomposition vanished."""


class Overflow(NumericFailure):
    """A matrix function produced non-finite entries."""


class BranchCut(NumericFailure):
    """An eigenvalue lies on the closed negative real axis (or is zero)."""


class SingularDenominator(NumericFailure):
    """A particle collision: some 1 - gamma_i/gamma_j or q_i - q_j vanished."""


class CollisionError(SingularDenominator):
    """Numerical integration halted near a collision.

    ``records`` holds the partial trajectory computed before the halt.
    """

    def __init__(self, message, records=None):
        super().__init__(message)
        self.records = list(records or [])


class StepTooLarge(NumericFailure):
    """Richardson extrapolation of a finite-difference bracket disagreed."""


class SingularShiftedDifference(NumericFailure):
    """Some h_i - h_j + kappa vanished in the Ruijsenaars reconstruction."""


class SingularSystem(NumericFailure):
    """The Cauchy-type linear system for the products phi_i psi_i is singular."""


class InconsistentData(NumericFailure):
    """Reconstructed data does not satisfy its defining relation."""


class ConfigError(SpinCMError):
    """Invalid run configuration."""
