# shufflebits/bitperm.py
"""
Permutation keys over the 32 bit positions of a binary32 word.

Bit positions are 0-based and MSB-first: position 0 is the sign bit,
position 31 the least significant mantissa bit. A key maps source
position i to destination position key.map[i].
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DuplicatePosition, InvalidKey, OutOfRange

WIDTH = 32
WORD_MASK = 0xFFFFFFFF

# A Word32 is a plain int in [0, 2**32). No float semantics attached.
Word32 = int


@dataclass(frozen=True)
class PermutationKey:
    map: tuple[int, ...]

    def __post_init__(self):
        _check_bijection(self.map)

    @cached_property
    def array(self) -> np.ndarray:
        """Destination index per source position, as an intp array."""
        arr = np.asarray(self.map, dtype=np.intp)
        arr.setflags(write=False)
        return arr

    @classmethod
    def random(cls, rng: Optional[np.random.Generator] = None) -> "PermutationKey":
        rng = rng or np.random.default_rng()
        return cls(tuple(int(x) for x in rng.permutation(WIDTH)))

    def __str__(self) -> str:
        return key_to_text(self)


def _check_bijection(candidate: Sequence[int]) -> None:
    if len(candidate) != WIDTH:
        raise InvalidKey(f"Key must have exactly {WIDTH} entries, got {len(candidate)}")
    seen: dict[int, int] = {}
    for i, v in enumerate(candidate):
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            raise InvalidKey(f"Key entry {i} is not an integer: {v!r}")
        if not 0 <= v < WIDTH:
            raise OutOfRange(f"Key entry {i} = {v} is outside 0..{WIDTH - 1}")
        if v in seen:
            raise DuplicatePosition(f"Position {v} appears at entries {seen[v]} and {i}")
        seen[int(v)] = i


# -------------------------
# Key construction
# -------------------------
def validate_key(candidate: Iterable[int]) -> PermutationKey:
    values = tuple(candidate)
    _check_bijection(values)
    return PermutationKey(tuple(int(v) for v in values))


def identity_key() -> PermutationKey:
    return PermutationKey(tuple(range(WIDTH)))


def invert_key(key: PermutationKey) -> PermutationKey:
    inv = [0] * WIDTH
    for i, j in enumerate(key.map):
        inv[j] = i
    return PermutationKey(tuple(inv))


def compose_keys(first: PermutationKey, second: PermutationKey) -> PermutationKey:
    """Key equivalent to encrypting with `first`, then with `second`."""
    return PermutationKey(tuple(second.map[j] for j in first.map))


def rotation_key(shift: int) -> PermutationKey:
    """Encryption with this key rotates the whole word left (toward the MSB) by `shift`."""
    s = shift % WIDTH
    return PermutationKey(tuple((i + WIDTH - s) % WIDTH for i in range(WIDTH)))


def is_rotation(key: PermutationKey) -> Optional[int]:
    shift = (-key.map[0]) % WIDTH
    return shift if key == rotation_key(shift) else None


# -------------------------
# Word-level cipher
# -------------------------
def _permute_word(word: Word32, mapping: Sequence[int]) -> Word32:
    if not 0 <= word <= WORD_MASK:
        raise ValueError(f"Not a 32-bit word: {word!r}")
    out = 0
    for i in range(WIDTH):
        if (word >> (WIDTH - 1 - i)) & 1:
            out |= 1 << (WIDTH - 1 - mapping[i])
    return out


def encrypt_word(plain: Word32, key: PermutationKey) -> Word32:
    """b[f(i)] = a[i]"""
    return _permute_word(plain, key.map)


def decrypt_word(cipher: Word32, key: PermutationKey) -> Word32:
    """c[g(j)] = b[j]; `key` is the decryption key g = invert_key(f)."""
    return _permute_word(cipher, key.map)


def popcount(word: Word32) -> int:
    return bin(word & WORD_MASK).count("1")


# -------------------------
# binary32 reinterpretation (plaintext boundary only)
# -------------------------
def float_to_word(x: float) -> Word32:
    return struct.unpack(">I", struct.pack(">f", x))[0]


def word_to_float(w: Word32) -> float:
    return struct.unpack(">f", struct.pack(">I", w & WORD_MASK))[0]


# -------------------------
# Text / binary key forms
# -------------------------
def key_to_text(key: PermutationKey) -> str:
    return ",".join(str(v) for v in key.map)


def key_from_text(text: str) -> PermutationKey:
    parts = [p.strip() for p in (text or "").strip().split(",")]
    try:
        values = [int(p, 10) for p in parts]
    except ValueError as e:
        raise InvalidKey(f"Key text must be {WIDTH} comma-separated integers: {e}") from e
    return validate_key(values)


def key_to_bytes(key: PermutationKey) -> bytes:
    return bytes(key.map)


def key_from_bytes(data: bytes) -> PermutationKey:
    if len(data) != WIDTH:
        raise InvalidKey(f"Binary key must be {WIDTH} bytes, got {len(data)}")
    return validate_key(data)
