# shufflebits/envelope.py
"""
`.shfb` envelope, version 1. All multi-byte fields little-endian.

  offset size field
       0    4 magic     b"SHFB"
       4    1 version   1
       5    1 mode      0 fixed, 1 per-request, 2 per-element
       6    1 dtype     0 = binary32
       7    1 cascade   0 none, 1 external stage applied to payload
       8   12 nonce
      20    8 count     number of vectors (u64)
      28    4 dim       components per vector (u32)
      32    4 checksum  CRC-32 of the payload bytes as stored
      36    . payload   count * dim little-endian 32-bit words

A wrong key is not detectable here: the checksum only catches corruption.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from functools import partial
from typing import Any, Callable, Optional

import numpy as np

from .bitperm import PermutationKey, invert_key
from .cascade import CascadeStage
from .codec import FeatureBatch, decrypt_batch, encrypt_batch
from .errors import (
    BadMagic,
    ChecksumMismatch,
    DimensionMismatch,
    EnvelopeError,
    LengthChanged,
    LengthMismatch,
    UnsupportedVersion,
)
from .keystream import NONCE_LEN, KeyMode, MasterSecret, Nonce
from .logs import get_logger

log = get_logger(__name__)

MAGIC = b"SHFB"
VERSION = 1
DTYPE_BINARY32 = 0
HEADER_FORMAT = "<4sBBBB12sQII"
HEADER_LEN = struct.calcsize(HEADER_FORMAT)
FILE_EXTENSION = ".shfb"

assert HEADER_LEN == 36


@dataclass(frozen=True)
class EnvelopeHeader:
    mode: KeyMode
    nonce: bytes
    count: int
    dim: int
    cascade: int = 0
    checksum: int = 0
    magic: bytes = MAGIC
    version: int = VERSION
    dtype: int = DTYPE_BINARY32

    @property
    def payload_len(self) -> int:
        return self.count * self.dim * 4

    @property
    def envelope_len(self) -> int:
        return HEADER_LEN + self.payload_len


def crc32(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


def _batch(body: bytes, count: int, dim: int) -> FeatureBatch:
    return FeatureBatch(np.frombuffer(body, dtype="<u4"), count, dim)


def write_envelope(header: EnvelopeHeader, payload: FeatureBatch) -> bytes:
    """Header (checksum computed here) followed by the payload words."""
    if header.count != payload.count or header.dim != payload.dim:
        raise DimensionMismatch(
            f"Header says {header.count}x{header.dim}, payload is {payload.count}x{payload.dim}"
        )
    if len(header.nonce) != NONCE_LEN:
        raise EnvelopeError(f"Nonce must be {NONCE_LEN} bytes, got {len(header.nonce)}")
    body = payload.to_bytes()
    head = struct.pack(
        HEADER_FORMAT,
        header.magic,
        header.version,
        int(header.mode),
        header.dtype,
        header.cascade,
        bytes(header.nonce),
        header.count,
        header.dim,
        crc32(body),
    )
    return head + body


def read_header(data: bytes) -> EnvelopeHeader:
    if len(data) < HEADER_LEN:
        raise LengthMismatch(f"Envelope needs at least {HEADER_LEN} bytes, got {len(data)}")
    magic, version, mode, dtype, cascade, nonce, count, dim, checksum = struct.unpack(
        HEADER_FORMAT, bytes(data[:HEADER_LEN])
    )
    if magic != MAGIC:
        raise BadMagic(f"Bad magic {magic!r} (expected {MAGIC!r})")
    if version != VERSION:
        raise UnsupportedVersion(f"Unsupported envelope version {version}")
    if dtype != DTYPE_BINARY32:
        raise UnsupportedVersion(f"Unsupported dtype {dtype} in version {version}")
    try:
        key_mode = KeyMode(mode)
    except ValueError as e:
        raise EnvelopeError(f"Unknown key mode byte {mode}") from e
    if cascade not in (0, 1):
        raise EnvelopeError(f"Unknown cascade flag {cascade}")
    return EnvelopeHeader(
        mode=key_mode,
        nonce=nonce,
        count=count,
        dim=dim,
        cascade=cascade,
        checksum=checksum,
        magic=magic,
        version=version,
        dtype=dtype,
    )


def read_envelope(data: bytes) -> tuple[EnvelopeHeader, FeatureBatch]:
    header = read_header(data)
    if len(data) != header.envelope_len:
        raise LengthMismatch(
            f"Envelope is {len(data)} bytes; header declares {header.count}x{header.dim} "
            f"({header.envelope_len} bytes)"
        )
    body = bytes(data[HEADER_LEN:])
    actual = crc32(body)
    if actual != header.checksum:
        raise ChecksumMismatch(
            f"Payload checksum {actual:08x} != stored {header.checksum:08x} (corrupted envelope)"
        )
    return header, _batch(body, header.count, header.dim)


def apply_cascade_stage(payload: bytes, stage: Callable[[bytes], bytes]) -> bytes:
    out = stage(payload)
    if len(out) != len(payload):
        raise LengthChanged(f"Cascade stage changed payload length {len(payload)} -> {len(out)}")
    return bytes(out)


# -------------------------
# End-to-end workflow
# -------------------------
def seal(
    batch: FeatureBatch,
    mode: KeyMode,
    nonce: Nonce,
    master: Optional[MasterSecret] = None,
    *,
    key: Optional[PermutationKey] = None,
    stage: Optional[CascadeStage] = None,
    workers: int = 1,
) -> bytes:
    """Encrypt a plaintext batch and wrap it in an envelope."""
    mode = KeyMode(mode)
    cipher = encrypt_batch(
        batch,
        mode,
        master if mode != KeyMode.FIXED_KEY else None,
        nonce if mode != KeyMode.FIXED_KEY else None,
        key=key,
        workers=workers,
    )
    if stage is not None:
        body = apply_cascade_stage(cipher.to_bytes(), partial(stage.forward, nonce=nonce))
        cipher = _batch(body, batch.count, batch.dim)
    header = EnvelopeHeader(
        mode=mode,
        nonce=nonce.raw,
        count=batch.count,
        dim=batch.dim,
        cascade=1 if stage is not None else 0,
    )
    log.info("sealed %dx%d batch (%s, nonce=%s, cascade=%s)", batch.count, batch.dim,
             mode.to_cli(), nonce.hex(), stage.name if stage else "none")
    return write_envelope(header, cipher)


def open_envelope(
    data: bytes,
    master: Optional[MasterSecret] = None,
    *,
    key: Optional[PermutationKey] = None,
    stage: Optional[CascadeStage] = None,
    workers: int = 1,
) -> tuple[EnvelopeHeader, FeatureBatch]:
    """
    Parse, undo the cascade stage, decrypt. For FIXED_KEY envelopes `key` is the
    encryption key f; it is inverted here.
    """
    header, stored = read_envelope(data)
    nonce = Nonce(header.nonce)
    if header.cascade:
        if stage is None:
            raise EnvelopeError("Envelope has a cascade stage applied; a matching stage is required")
        body = apply_cascade_stage(stored.to_bytes(), partial(stage.inverse, nonce=nonce))
        stored = _batch(body, header.count, header.dim)
    if header.mode == KeyMode.FIXED_KEY:
        if key is None:
            raise EnvelopeError("FIXED_KEY envelope: an explicit key is required")
        plain = decrypt_batch(stored, header.mode, key=invert_key(key), workers=workers)
    else:
        plain = decrypt_batch(stored, header.mode, master, nonce, workers=workers)
    return header, plain


def describe_header(header: EnvelopeHeader) -> dict[str, Any]:
    return {
        "magic": header.magic.decode("ascii", errors="replace"),
        "version": header.version,
        "mode": header.mode.to_cli(),
        "dtype": "binary32" if header.dtype == DTYPE_BINARY32 else str(header.dtype),
        "cascade": bool(header.cascade),
        "nonce": bytes(header.nonce).hex(),
        "count": header.count,
        "dim": header.dim,
        "checksum": f"{header.checksum:08x}",
        "payload_bytes": header.payload_len,
        "envelope_bytes": header.envelope_len,
    }
