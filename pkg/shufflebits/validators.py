# shufflebits/validators.py
# Pre-flight checks for uploaded / CLI input files. Return (ok, message, count)
# instead of raising so the dashboard can show the message inline.

import numpy as np

from .envelope import HEADER_LEN, MAGIC, read_envelope
from .errors import EnvelopeError


def validate_feature_dump(data: bytes, dim: int) -> tuple[bool, str, int]:
    """
    Raw little-endian binary32 dump of count x dim values.

    Returns: (ok, message, vector_count)
    """
    if dim <= 0:
        return False, f"dim must be >= 1, got {dim}", 0
    if len(data) % 4:
        return False, f"Length {len(data)} is not a multiple of 4 bytes", 0
    words = len(data) // 4
    if words % dim:
        return False, f"{words} values do not split into {dim}-dim vectors", 0
    count = words // dim
    if count == 0:
        return True, "OK (empty)", 0

    if data[:4] == MAGIC and len(data) >= HEADER_LEN:
        # could be a real dump, but almost certainly the user picked an envelope
        return True, "OK; note: starts with envelope magic, did you mean to decrypt?", count

    values = np.frombuffer(data, dtype="<f4")
    non_finite = int(np.count_nonzero(~np.isfinite(values)))
    note = f"; {non_finite} non-finite value(s)" if non_finite else ""
    return True, "OK" + note, count


def validate_envelope_bytes(data: bytes) -> tuple[bool, str, int]:
    """Full structural check (header, length, checksum). Returns (ok, message, vector_count)."""
    try:
        header, _ = read_envelope(data)
    except EnvelopeError as e:
        return False, f"{type(e).__name__}: {e}", 0
    return True, f"OK ({header.mode.to_cli()}, {header.count}x{header.dim})", header.count
