# shufflebits/cascade.py
"""
Length-preserving byte-stream stages stacked on top of the ShuffleBits payload.

A stage gets its own 32-byte key. Never reuse the master secret here: the XOR
stage runs the same ChaCha20 keystream family as the key schedule.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .keystream import MasterSecret, Nonce, chacha20_keystream

STAGE_KEY_LEN = 32
STAGE_NAMES = ("none", "xor", "aes-ctr")


class CascadeStage(Protocol):
    name: str

    def forward(self, payload: bytes, nonce: Nonce) -> bytes: ...

    def inverse(self, payload: bytes, nonce: Nonce) -> bytes: ...


def _check_stage_key(key: bytes) -> bytes:
    if not isinstance(key, (bytes, bytearray)) or len(key) != STAGE_KEY_LEN:
        raise ValueError(f"Cascade key must be exactly {STAGE_KEY_LEN} bytes")
    return bytes(key)


@dataclass(frozen=True)
class IdentityStage:
    name: str = "identity"

    def forward(self, payload: bytes, nonce: Nonce) -> bytes:
        return bytes(payload)

    def inverse(self, payload: bytes, nonce: Nonce) -> bytes:
        return bytes(payload)


@dataclass(frozen=True)
class XorKeystreamStage:
    """Reference stage: payload XOR ChaCha20 keystream (an involution)."""

    key: bytes = field(repr=False)
    name: str = "xor"

    def __post_init__(self):
        object.__setattr__(self, "key", _check_stage_key(self.key))

    def forward(self, payload: bytes, nonce: Nonce) -> bytes:
        if not payload:
            return b""
        stream = chacha20_keystream(MasterSecret(self.key), nonce, 0, len(payload))
        a = np.frombuffer(payload, dtype=np.uint8)
        b = np.frombuffer(stream, dtype=np.uint8)
        return np.bitwise_xor(a, b).tobytes()

    inverse = forward


@dataclass(frozen=True)
class AesCtrStage:
    """AES-256-CTR; initial counter block = nonce || 0x00000000."""

    key: bytes = field(repr=False)
    name: str = "aes-ctr"

    def __post_init__(self):
        object.__setattr__(self, "key", _check_stage_key(self.key))

    def _cipher(self, nonce: Nonce) -> Cipher:
        return Cipher(algorithms.AES(self.key), modes.CTR(nonce.raw + b"\x00" * 4))

    def forward(self, payload: bytes, nonce: Nonce) -> bytes:
        enc = self._cipher(nonce).encryptor()
        return enc.update(bytes(payload)) + enc.finalize()

    def inverse(self, payload: bytes, nonce: Nonce) -> bytes:
        dec = self._cipher(nonce).decryptor()
        return dec.update(bytes(payload)) + dec.finalize()


def make_stage(name: str, key: Optional[bytes] = None) -> Optional[CascadeStage]:
    n = (name or "none").strip().lower()
    if n == "none":
        return None
    if key is None:
        raise ValueError(f"Cascade stage '{n}' needs a {STAGE_KEY_LEN}-byte key")
    if n == "xor":
        return XorKeystreamStage(key)
    if n == "aes-ctr":
        return AesCtrStage(key)
    raise ValueError(f"Unknown cascade stage: {name} (expected one of {', '.join(STAGE_NAMES)})")
