"""Exception types raised across the package."""


class MpcError(Exception):
    """Base class for all package errors."""


class EncodingRangeError(MpcError, ValueError):
    """Input value exceeds the representable fixed-point magnitude."""


class UsageError(MpcError, ValueError):
    """Caller violated an operation contract (dims, owner, parameter range)."""


class IntegrityError(MpcError):
    """Shares that must agree do not; signals corruption or misrouted data."""


class TransportError(MpcError):
    """Channel failure: short read, closed peer, sequence gap."""


class HandshakeError(MpcError):
    """Peers disagree on protocol version or public job parameters."""


class RandomnessError(MpcError):
    """Correlated-randomness counter was reused or exhausted."""


class IngestionError(MpcError, ValueError):
    """Malformed dataset input; message carries the offending position."""
