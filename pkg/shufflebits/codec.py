# shufflebits/codec.py
"""
Element-wise ShuffleBits over feature batches.

Two execution paths produce identical output:
  - reference: every word is unpacked to 32 bits and scattered through its own key map
  - bit-sliced: blocks of 32 words are transposed into 32 bit-planes with
    shift/mask swaps, the key relabels whole planes, and the block is
    transposed back (single key only)

Element index = vector_index * dim + component_index; that index selects the
per-element key in PER_ELEMENT mode.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import pandas as pd

from .bitperm import WIDTH, PermutationKey
from .errors import DimensionMismatch, EmptyBatch, InvalidKey, ModeMismatch
from .keystream import (
    KeyMode,
    MasterSecret,
    Nonce,
    derive_element_keys,
    derive_request_key,
)
from .logs import get_logger

log = get_logger(__name__)

CHUNK_WORDS = 1 << 16


@dataclass(frozen=True, eq=False)
class FeatureBatch:
    words: np.ndarray
    count: int
    dim: int

    def __post_init__(self):
        words = np.array(self.words, dtype=np.uint32, copy=True).reshape(-1)
        if self.count < 0 or self.dim < 0:
            raise DimensionMismatch(f"count/dim must be non-negative (count={self.count}, dim={self.dim})")
        if words.size != self.count * self.dim:
            raise DimensionMismatch(
                f"{words.size} words do not match count={self.count} x dim={self.dim}"
            )
        words.setflags(write=False)
        object.__setattr__(self, "words", words)

    def __len__(self) -> int:
        return int(self.words.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureBatch):
            return NotImplemented
        return (
            self.count == other.count
            and self.dim == other.dim
            and np.array_equal(self.words, other.words)
        )

    def replace_words(self, words: np.ndarray) -> "FeatureBatch":
        return FeatureBatch(words, self.count, self.dim)

    # -------------------------
    # Conversions
    # -------------------------
    @classmethod
    def from_floats(cls, matrix) -> "FeatureBatch":
        arr = np.ascontiguousarray(matrix, dtype=np.float32)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise DimensionMismatch(f"Expected a (count, dim) matrix, got shape {arr.shape}")
        return cls(arr.view(np.uint32).reshape(-1), arr.shape[0], arr.shape[1])

    def to_floats(self) -> np.ndarray:
        """Raw reinterpretation; NaN payloads come back untouched."""
        return self.words.view(np.float32).reshape(self.count, self.dim)

    @classmethod
    def from_bytes(cls, raw: bytes, dim: int) -> "FeatureBatch":
        if len(raw) % 4:
            raise DimensionMismatch(f"Input length {len(raw)} is not a multiple of 4")
        n = len(raw) // 4
        if dim <= 0:
            if n:
                raise DimensionMismatch(f"dim must be >= 1 for {n} words")
            return cls(np.empty(0, dtype=np.uint32), 0, 0)
        if n % dim:
            raise DimensionMismatch(f"{n} words are not a whole number of {dim}-dim vectors")
        words = np.frombuffer(raw, dtype="<u4").astype(np.uint32)
        return cls(words, n // dim, dim)

    def to_bytes(self) -> bytes:
        return self.words.astype("<u4").tobytes()


# -------------------------
# Bit matrix helpers (MSB-first columns)
# -------------------------
def words_to_bits(words: np.ndarray) -> np.ndarray:
    be = np.ascontiguousarray(words, dtype=">u4")
    return np.unpackbits(be.view(np.uint8).reshape(-1, 4), axis=1)


def bits_to_words(bits: np.ndarray) -> np.ndarray:
    packed = np.packbits(bits, axis=-1)
    return np.ascontiguousarray(packed).view(">u4").reshape(packed.shape[:-1]).astype(np.uint32)


def permute_words(words: np.ndarray, maps: np.ndarray) -> np.ndarray:
    """
    Reference path. `maps` is one key map (32,) for every word, or one row per
    word (n, 32). Output bit maps[i] = input bit i.
    """
    words = np.asarray(words, dtype=np.uint32).reshape(-1)
    if words.size == 0:
        return np.empty(0, dtype=np.uint32)
    bits = words_to_bits(words)
    out = np.zeros_like(bits)
    if maps.ndim == 1:
        out[:, maps] = bits
    else:
        if maps.shape != (words.size, WIDTH):
            raise InvalidKey(f"Key table shape {maps.shape} does not match {words.size} words")
        out[np.arange(words.size)[:, None], maps] = bits
    return bits_to_words(out)


_SWAP_ROUNDS = (
    (16, np.uint32(0x0000FFFF)),
    (8, np.uint32(0x00FF00FF)),
    (4, np.uint32(0x0F0F0F0F)),
    (2, np.uint32(0x33333333)),
    (1, np.uint32(0x55555555)),
)


def _transpose_blocks(blocks: np.ndarray) -> np.ndarray:
    """
    (B, 32) words -> (B, 32) words, transposing each 32x32 bit matrix
    (row = word, column = MSB-first bit). Five mask/shift delta-swap rounds,
    each applied to every block at once.
    """
    b = blocks.shape[0]
    out = np.array(blocks, dtype=np.uint32, copy=True).reshape(b, WIDTH)
    for j, mask in _SWAP_ROUNDS:
        pairs = out.reshape(b, WIDTH // (2 * j), 2, j)
        lo, hi = pairs[:, :, 0, :], pairs[:, :, 1, :]
        t = (lo ^ (hi >> np.uint32(j))) & mask
        lo ^= t
        hi ^= t << np.uint32(j)
    return out


def permute_words_bitsliced(words: np.ndarray, key_map: np.ndarray) -> np.ndarray:
    words = np.asarray(words, dtype=np.uint32).reshape(-1)
    n_sliced = (words.size // WIDTH) * WIDTH
    out = np.empty_like(words)
    if n_sliced:
        planes = _transpose_blocks(words[:n_sliced].reshape(-1, WIDTH))
        relabeled = np.empty_like(planes)
        relabeled[:, key_map] = planes
        out[:n_sliced] = _transpose_blocks(relabeled).reshape(-1)
    if n_sliced < words.size:
        out[n_sliced:] = permute_words(words[n_sliced:], key_map)
    return out


# -------------------------
# Key tables
# -------------------------
def _require_key(key) -> PermutationKey:
    if key is None:
        raise ModeMismatch("FIXED_KEY mode requires an explicit PermutationKey")
    if not isinstance(key, PermutationKey):
        raise InvalidKey(f"Expected a PermutationKey, got {type(key).__name__}")
    return key


def request_keys(
    mode: KeyMode,
    master: Optional[MasterSecret],
    nonce: Optional[Nonce],
    start: int,
    count: int,
    key: Optional[PermutationKey] = None,
) -> np.ndarray:
    """Encryption key map(s) for elements start .. start+count-1: (32,) or (count, 32)."""
    mode = KeyMode(mode)
    if mode == KeyMode.FIXED_KEY:
        return _require_key(key).array
    if master is None or nonce is None:
        raise ModeMismatch(f"{mode.name} mode requires a master secret and a nonce")
    if key is not None:
        raise ModeMismatch(f"{mode.name} mode derives its keys; do not pass an explicit key")
    if mode == KeyMode.PER_REQUEST:
        return derive_request_key(master, nonce).array
    return derive_element_keys(master, nonce, start, count)


def _inverse_maps(maps: np.ndarray) -> np.ndarray:
    return np.argsort(maps, axis=-1)


def _chunks(n: int, chunk: int) -> list[tuple[int, int]]:
    return [(s, min(s + chunk, n)) for s in range(0, n, chunk)]


def _run_chunks(n: int, fn: Callable[[int, int], np.ndarray], workers: int, chunk: int) -> np.ndarray:
    spans = _chunks(n, chunk)
    if not spans:
        return np.empty(0, dtype=np.uint32)
    if workers <= 1 or len(spans) == 1:
        parts = [fn(s, e) for s, e in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda se: fn(*se), spans))
    return np.concatenate(parts)


def _apply(batch, mode, master, nonce, key, workers, chunk, invert: bool) -> FeatureBatch:
    mode = KeyMode(mode)
    if mode != KeyMode.PER_ELEMENT:
        maps = request_keys(mode, master, nonce, 0, len(batch), key)
        if invert and mode != KeyMode.FIXED_KEY:
            maps = _inverse_maps(maps)
        fn = lambda s, e: permute_words(batch.words[s:e], maps)  # noqa: E731
    else:
        request_keys(mode, master, nonce, 0, 0, key)

        def fn(s: int, e: int) -> np.ndarray:
            maps = derive_element_keys(master, nonce, s, e - s)
            if invert:
                maps = _inverse_maps(maps)
            return permute_words(batch.words[s:e], maps)

    out = _run_chunks(len(batch), fn, workers, chunk)
    log.debug("%s %d words (%s, workers=%d)", "decrypted" if invert else "encrypted",
              len(batch), mode.name, workers)
    return batch.replace_words(out)


def encrypt_batch(
    batch: FeatureBatch,
    mode: KeyMode,
    master: Optional[MasterSecret] = None,
    nonce: Optional[Nonce] = None,
    *,
    key: Optional[PermutationKey] = None,
    workers: int = 1,
    chunk: int = CHUNK_WORDS,
) -> FeatureBatch:
    """FIXED_KEY takes `key` (the encryption key f); the other modes derive keys."""
    return _apply(batch, mode, master, nonce, key, workers, chunk, invert=False)


def decrypt_batch(
    batch: FeatureBatch,
    mode: KeyMode,
    master: Optional[MasterSecret] = None,
    nonce: Optional[Nonce] = None,
    *,
    key: Optional[PermutationKey] = None,
    workers: int = 1,
    chunk: int = CHUNK_WORDS,
) -> FeatureBatch:
    """FIXED_KEY takes `key` as the decryption key g = invert_key(f)."""
    return _apply(batch, mode, master, nonce, key, workers, chunk, invert=True)


def encrypt_batch_bitsliced(
    batch: FeatureBatch,
    key: PermutationKey,
    *,
    workers: int = 1,
    chunk: int = CHUNK_WORDS,
) -> FeatureBatch:
    """One key for the whole batch (FIXED_KEY / PER_REQUEST)."""
    key_map = _require_key(key).array
    # keep chunk boundaries on 32-word blocks so only the final tail is scalar
    chunk = max(WIDTH, (chunk // WIDTH) * WIDTH)
    out = _run_chunks(len(batch), lambda s, e: permute_words_bitsliced(batch.words[s:e], key_map),
                      workers, chunk)
    return batch.replace_words(out)


# -------------------------
# Frequency analysis
# -------------------------
def bit_frequency_profile(batch: FeatureBatch) -> np.ndarray:
    """Fraction of words with bit p set, p = 0 (MSB) .. 31."""
    n = len(batch)
    if n == 0:
        raise EmptyBatch("Frequency profile needs at least one word")
    counts = np.zeros(WIDTH, dtype=np.int64)
    for s, e in _chunks(n, CHUNK_WORDS):
        counts += words_to_bits(batch.words[s:e]).sum(axis=0, dtype=np.int64)
    return counts / n


def _field_of(position: int) -> str:
    if position == 0:
        return "sign"
    return "exponent" if position <= 8 else "mantissa"


def profile_frame(profile) -> pd.DataFrame:
    profile = np.asarray(profile, dtype=np.float64)
    return pd.DataFrame(
        {
            "position": np.arange(profile.size),
            "field": [_field_of(p) for p in range(profile.size)],
            "frequency": profile,
        }
    )


def frequency_spread(profile) -> float:
    profile = np.asarray(profile, dtype=np.float64)
    return float(profile.max() - profile.min())


def binomial_bound(rho: float, n: int, sigmas: float = 5.0) -> float:
    """Half-width of a `sigmas` band around a binomial frequency rho over n trials."""
    return sigmas * float(np.sqrt(rho * (1.0 - rho) / n))
