"""Exception types shared across the package."""


class EbchanError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(EbchanError, ValueError):
    """Operands have incompatible shapes."""


class ValidationError(EbchanError, ValueError):
    """An input object violates its contract (bad channel, POVM, subspace, ...)."""


class AlgebraNotClosed(ValidationError):
    """A claimed operator algebra is not closed under adjoint or multiplication."""


class ParseError(EbchanError, ValueError):
    """Malformed serialized input."""


class VerificationError(EbchanError, RuntimeError):
    """An internally constructed object failed its own numerical check."""


class PrivacyViolation(VerificationError):
    """A claimed private algebra contains an element the channel does not privatize."""

    def __init__(self, message, worst_element=None, worst_residual=None):
        super().__init__(message)
        self.worst_element = worst_element
        self.worst_residual = worst_residual
