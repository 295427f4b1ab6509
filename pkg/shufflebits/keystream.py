# shufflebits/keystream.py
"""
Per-request / per-element permutation keys derived from a master secret.

Derivation (pinned for interop):
  keystream = ChaCha20 (RFC 8439 block function), key = master (32 bytes),
              nonce = request nonce (12 bytes), block counter starting at 4 * index
  shuffle   = Fisher-Yates over [0..31], i = 31 down to 1, each draw a
              little-endian uint32 w, accepted iff w < floor(2**32 / (i+1)) * (i+1),
              j = w mod (i+1), swap(i, j)

Each element index owns a region of 4 blocks (64 draws). 31 accepted draws are
needed, so a region only runs out after 33 rejections.
"""
from __future__ import annotations

import secrets
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

from .bitperm import WIDTH, PermutationKey
from .errors import EntropyUnavailable
from .logs import get_logger

log = get_logger(__name__)

MASTER_LEN = 32
NONCE_LEN = 12
BLOCK_BYTES = 64
BLOCKS_PER_KEY = 4
DRAWS_PER_REGION = BLOCKS_PER_KEY * BLOCK_BYTES // 4
MAX_ELEMENT_INDEX = (1 << 32) // BLOCKS_PER_KEY - 1


@dataclass(frozen=True)
class MasterSecret:
    raw: bytes = field(repr=False)

    def __post_init__(self):
        if not isinstance(self.raw, (bytes, bytearray)) or len(self.raw) != MASTER_LEN:
            raise ValueError(f"Master secret must be exactly {MASTER_LEN} bytes")
        object.__setattr__(self, "raw", bytes(self.raw))


@dataclass(frozen=True)
class Nonce:
    raw: bytes

    def __post_init__(self):
        if not isinstance(self.raw, (bytes, bytearray)) or len(self.raw) != NONCE_LEN:
            raise ValueError(f"Nonce must be exactly {NONCE_LEN} bytes")
        object.__setattr__(self, "raw", bytes(self.raw))

    @classmethod
    def from_hex(cls, text: str) -> "Nonce":
        t = (text or "").strip().lower()
        if t.startswith("0x"):
            t = t[2:]
        if len(t) != 2 * NONCE_LEN:
            raise ValueError(f"Nonce must be {2 * NONCE_LEN} hex characters, got {len(t)}")
        try:
            return cls(bytes.fromhex(t))
        except ValueError as e:
            raise ValueError(f"Nonce is not valid hex: {text!r}") from e

    @classmethod
    def random(cls) -> "Nonce":
        return cls(secrets.token_bytes(NONCE_LEN))

    def hex(self) -> str:
        return self.raw.hex()


class KeyMode(IntEnum):
    FIXED_KEY = 0
    PER_REQUEST = 1
    PER_ELEMENT = 2

    @staticmethod
    def from_cli(name: str) -> "KeyMode":
        n = (name or "").strip().lower().replace("_", "-")
        if n in ("fixed", "fixed-key"):
            return KeyMode.FIXED_KEY
        if n == "per-request":
            return KeyMode.PER_REQUEST
        if n == "per-element":
            return KeyMode.PER_ELEMENT
        raise ValueError(f"Unsupported key mode: {name}")

    def to_cli(self) -> str:
        return {
            KeyMode.FIXED_KEY: "fixed",
            KeyMode.PER_REQUEST: "per-request",
            KeyMode.PER_ELEMENT: "per-element",
        }[self]


# -------------------------
# Master secret
# -------------------------
def generate_master() -> MasterSecret:
    try:
        raw = secrets.token_bytes(MASTER_LEN)
    except (NotImplementedError, OSError) as e:
        raise EntropyUnavailable(f"System entropy source unavailable: {e}") from e
    return MasterSecret(raw)


def keyspace_size(width: int = WIDTH) -> int:
    """width! as an exact integer (32! for binary32 words)."""
    if width < 0:
        raise ValueError("width must be non-negative")
    total = 1
    for k in range(2, width + 1):
        total *= k
    return total


# -------------------------
# Keystream
# -------------------------
def chacha20_keystream(master: MasterSecret, nonce: Nonce, counter: int, nbytes: int) -> bytes:
    """RFC 8439 keystream starting at 32-bit block `counter`."""
    if not 0 <= counter < (1 << 32):
        raise ValueError(f"Block counter out of range: {counter}")
    full_nonce = struct.pack("<I", counter) + nonce.raw
    enc = Cipher(algorithms.ChaCha20(master.raw, full_nonce), mode=None).encryptor()
    return enc.update(b"\x00" * nbytes)


def _draws(master: MasterSecret, nonce: Nonce, counter: int) -> Iterator[int]:
    while True:
        block = chacha20_keystream(master, nonce, counter, BLOCK_BYTES)
        yield from struct.unpack(f"<{BLOCK_BYTES // 4}I", block)
        counter += 1


def _shuffle_from_draws(draws: Iterator[int]) -> list[int]:
    perm = list(range(WIDTH))
    for i in range(WIDTH - 1, 0, -1):
        n = i + 1
        limit = ((1 << 32) // n) * n
        while True:
            w = next(draws)
            if w < limit:
                break
        j = w % n
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def _check_index_range(start: int, count: int) -> None:
    if start < 0 or count < 0:
        raise ValueError(f"Element index must be >= 0 (start={start}, count={count})")
    if count and start + count - 1 > MAX_ELEMENT_INDEX:
        raise ValueError(f"Element index exceeds {MAX_ELEMENT_INDEX}")


def derive_element_keys(master: MasterSecret, nonce: Nonce, start: int, count: int) -> np.ndarray:
    """
    Key maps for element indices start .. start+count-1, shape (count, 32).
    Row r is identical to derive_element_key(master, nonce, start + r).
    """
    _check_index_range(start, count)
    if count == 0:
        return np.empty((0, WIDTH), dtype=np.intp)

    stream = chacha20_keystream(
        master, nonce, start * BLOCKS_PER_KEY, count * BLOCKS_PER_KEY * BLOCK_BYTES
    )
    words = np.frombuffer(stream, dtype="<u4").reshape(count, DRAWS_PER_REGION).astype(np.uint64)

    rows = np.arange(count)
    perm = np.tile(np.arange(WIDTH, dtype=np.intp), (count, 1))
    ptr = np.zeros(count, dtype=np.intp)
    exhausted = np.zeros(count, dtype=bool)

    for i in range(WIDTH - 1, 0, -1):
        n = i + 1
        limit = ((1 << 32) // n) * n
        w = words[rows, ptr]
        rejected = w >= limit
        while rejected.any():
            ptr[rejected] += 1
            out = rejected & (ptr >= DRAWS_PER_REGION)
            if out.any():
                exhausted |= out
                ptr[out] = 0
                rejected &= ~out
            w[rejected] = words[rows[rejected], ptr[rejected]]
            rejected &= w >= limit
        ptr += 1
        if i > 1:
            over = ptr >= DRAWS_PER_REGION
            if over.any():
                exhausted |= over
                ptr[over] = 0
        j = (w % n).astype(np.intp)
        held = perm[rows, i].copy()
        perm[rows, i] = perm[rows, j]
        perm[rows, j] = held

    for r in np.flatnonzero(exhausted):
        index = start + int(r)
        log.debug("keystream region exhausted at element %d; extending", index)
        perm[r] = _shuffle_from_draws(_draws(master, nonce, index * BLOCKS_PER_KEY))

    return perm


def derive_element_key(master: MasterSecret, nonce: Nonce, index: int) -> PermutationKey:
    row = derive_element_keys(master, nonce, index, 1)[0]
    return PermutationKey(tuple(int(v) for v in row))


def derive_request_key(master: MasterSecret, nonce: Nonce) -> PermutationKey:
    return derive_element_key(master, nonce, 0)
