"""Exception types shared across the package."""


class ViscidError(Exception):
    """Base class for all viscid-specific errors."""


class ConfigurationError(ViscidError):
    """A run configuration is inconsistent (grid too small, bad ranges, ...)."""


class DomainTooSmallError(ViscidError):
    """The spatial domain cannot contain the kernel tails or the solution."""


class UnsupportedFluxError(ViscidError):
    """The requested operation has no canonical definition for this flux kind."""


class InstabilityError(ViscidError):
    """A solver produced NaN or violated a maximum-principle assertion.

    Carries the step diagnostics collected up to the failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BlockSizeError(ViscidError):
    """Picard iterates diverged; the time block must be reduced."""


class PreconditionError(ViscidError):
    """An analysis operation was called on insufficient data."""
