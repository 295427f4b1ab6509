# shufflebits/errors.py
"""Exception hierarchy shared by the library, the CLI and the dashboard."""


class ShuffleBitsError(Exception):
    pass


# -------------------------
# Keys / keystream
# -------------------------
class InvalidKey(ShuffleBitsError, ValueError):
    pass


class DuplicatePosition(InvalidKey):
    pass


class OutOfRange(InvalidKey):
    pass


class EntropyUnavailable(ShuffleBitsError):
    pass


# -------------------------
# Batches
# -------------------------
class ModeMismatch(ShuffleBitsError, ValueError):
    pass


class EmptyBatch(ShuffleBitsError, ValueError):
    pass


class DimensionMismatch(ShuffleBitsError, ValueError):
    pass


# -------------------------
# Envelope (wire format)
# -------------------------
class EnvelopeError(ShuffleBitsError, ValueError):
    pass


class BadMagic(EnvelopeError):
    pass


class UnsupportedVersion(EnvelopeError):
    pass


class LengthMismatch(EnvelopeError):
    pass


class ChecksumMismatch(EnvelopeError):
    """Payload bytes do not match the stored CRC-32 (corruption, not a wrong key)."""


class LengthChanged(EnvelopeError):
    pass


# -------------------------
# Attack harness
# -------------------------
class HarnessError(ShuffleBitsError, ValueError):
    pass


class InvalidProportions(HarnessError):
    pass


class MissingClass(HarnessError):
    pass


class DegenerateFeatures(HarnessError):
    pass


class DimMismatch(HarnessError):
    pass


class ZeroVector(HarnessError):
    pass


class ProfileLengthInvalid(HarnessError):
    pass


class MetricLengthMismatch(HarnessError):
    pass


# -------------------------
# Front ends
# -------------------------
class ConfigError(ShuffleBitsError, ValueError):
    pass


class UsageError(ShuffleBitsError):
    exit_code = 2
