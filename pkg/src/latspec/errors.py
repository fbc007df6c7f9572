"""Exception types shared across the package."""


class LatspecError(Exception):
    """Base class for errors raised by this package."""


class DomainMismatchError(LatspecError, ValueError):
    """Two objects live on different lattice domains."""


class SpecError(LatspecError, ValueError):
    """A potential or run specification is malformed.

    ``pointer`` is a JSON pointer (RFC 6901) to the offending field.
    """

    def __init__(self, message, pointer=""):
        super().__init__(f"{message} (at {pointer or '/'})")
        self.pointer = pointer
        self.detail = message


class InsufficientSpectrumError(LatspecError):
    """Fewer trial functions or sites than requested could be found."""

    def __init__(self, message, achieved, found=None):
        super().__init__(f"{message}: found {achieved}")
        self.achieved = achieved
        self.found = list(found or [])


class HypothesisError(LatspecError, ValueError):
    """The hypotheses of a construction are not met by the input."""


class SizeCapError(LatspecError, ValueError):
    """A dense computation was requested above the configured size cap."""
