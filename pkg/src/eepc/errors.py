"""Exception types shared across the package."""


class EepcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(EepcError, ValueError):
    """Invalid structural input: bad dimensions, out-of-range parameters."""


class DomainError(EepcError, ValueError):
    """A quantity is mathematically undefined for the given inputs
    (e.g. the queue load ratio at q=1, f=0, or the efficiency metric at
    b=0, p=0)."""


class ProtocolMismatchError(EepcError):
    """An operation was invoked under the wrong arrival-rate protocol."""


class NumericalError(EepcError):
    """A solver encountered a non-finite value.  The offending power
    profile, when known, is attached as the ``profile`` attribute."""

    def __init__(self, message, profile=None):
        super().__init__(message)
        self.profile = profile


class BoundaryPointError(EepcError):
    """A first-order condition was requested at a boundary point where
    it does not apply."""


class CapabilityError(EepcError):
    """The requested exact computation is out of reach (e.g. exhaustive
    grid search in too many dimensions); an explicit fallback exists."""
