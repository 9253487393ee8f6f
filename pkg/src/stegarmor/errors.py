"""Exception hierarchy shared by all stegarmor modules."""


class StegError(Exception):
    """Base class for every error raised by this package."""


# codec
class MalformedStream(StegError, ValueError):
    pass


class UnsupportedFeature(StegError, ValueError):
    pass


class CoefficientOverflow(StegError, ValueError):
    pass


class InvalidQuality(StegError, ValueError):
    pass


class DimensionMismatch(StegError, ValueError):
    pass


# costs / domains
class InvalidAlpha(StegError, ValueError):
    pass


class InvalidDomainIndex(StegError, ValueError):
    pass


class LengthMismatch(StegError, ValueError):
    pass


# error correction
class InvalidCapability(StegError, ValueError):
    pass


class FramingError(StegError, ValueError):
    pass


class DecodeFailure(StegError):
    """RS decoding could not correct at least one block.

    ``bits`` holds the best-effort message (failed blocks are passed through
    uncorrected) so callers can still measure bit error rates.
    """

    def __init__(self, message, bits=None, failed_blocks=()):
        super().__init__(message)
        self.bits = bits
        self.failed_blocks = tuple(failed_blocks)


# syndrome coding
class CapacityExceeded(StegError, ValueError):
    pass


class InfeasibleSyndrome(StegError):
    pass


# embedder
class InvalidPayload(StegError, ValueError):
    pass


class ExtractFailure(StegError):
    """Message could not be recovered; ``bits`` is the best-effort output."""

    def __init__(self, message, bits=None):
        super().__init__(message)
        self.bits = bits


class NotFound(StegError):
    pass
