import numpy as np
import pytest

from shufflebits.bitperm import (
    WIDTH,
    PermutationKey,
    compose_keys,
    decrypt_word,
    encrypt_word,
    float_to_word,
    identity_key,
    invert_key,
    is_rotation,
    key_from_bytes,
    key_from_text,
    key_to_bytes,
    key_to_text,
    popcount,
    rotation_key,
    validate_key,
    word_to_float,
)
from shufflebits.errors import DuplicatePosition, InvalidKey, OutOfRange


def test_validate_key_accepts_permutation():
    key = validate_key(reversed(range(WIDTH)))
    assert key.map == tuple(range(WIDTH - 1, -1, -1))


def test_validate_key_rejects_duplicate():
    values = list(range(WIDTH))
    values[5] = 4
    with pytest.raises(DuplicatePosition):
        validate_key(values)


def test_validate_key_rejects_out_of_range():
    values = list(range(WIDTH))
    values[0] = 32
    with pytest.raises(OutOfRange):
        validate_key(values)


def test_validate_key_rejects_wrong_length():
    with pytest.raises(InvalidKey):
        validate_key(range(31))


def test_key_errors_are_value_errors():
    with pytest.raises(ValueError):
        PermutationKey((0,) * WIDTH)


def test_invert_key_is_involution(rng):
    for _ in range(50):
        key = PermutationKey.random(rng)
        assert invert_key(invert_key(key)) == key
        assert compose_keys(key, invert_key(key)) == identity_key()


def test_rotate_left_by_one():
    key = rotation_key(1)
    assert encrypt_word(0x3F800000, key) == 0x7F000000
    assert decrypt_word(0x7F000000, invert_key(key)) == 0x3F800000
    # decryption key is a right rotation by one
    assert invert_key(key) == rotation_key(31)


def test_all_rotation_shifts_roundtrip(rng):
    words = [int(w) for w in rng.integers(0, 1 << 32, size=64, dtype=np.uint64)]
    for s in range(WIDTH):
        key = rotation_key(s)
        assert is_rotation(key) == s
        g = invert_key(key)
        for w in words:
            c = encrypt_word(w, key)
            assert c == ((w << s) | (w >> (WIDTH - s))) & 0xFFFFFFFF
            assert decrypt_word(c, g) == w


def test_is_rotation_rejects_other_keys():
    key = validate_key([1, 0] + list(range(2, WIDTH)))
    assert is_rotation(key) is None


def test_identity_key_is_noop(special_words):
    for w in special_words:
        assert encrypt_word(int(w), identity_key()) == int(w)


def test_roundtrip_and_popcount_preserved(rng, special_words):
    words = [int(w) for w in special_words] + [int(w) for w in rng.integers(0, 1 << 32, size=500, dtype=np.uint64)]
    for _ in range(20):
        key = PermutationKey.random(rng)
        g = invert_key(key)
        for w in words:
            c = encrypt_word(w, key)
            assert popcount(c) == popcount(w)
            assert decrypt_word(c, g) == w


def test_compose_keys_matches_sequential_encryption(rng):
    f1, f2 = PermutationKey.random(rng), PermutationKey.random(rng)
    both = compose_keys(f1, f2)
    for w in rng.integers(0, 1 << 32, size=100, dtype=np.uint64):
        assert encrypt_word(int(w), both) == encrypt_word(encrypt_word(int(w), f1), f2)


def test_single_bit_moves_to_its_destination():
    key = validate_key([31] + list(range(1, 31)) + [0])
    # sign bit -> least significant bit
    assert encrypt_word(0x80000000, key) == 0x00000001


def test_encrypt_word_rejects_wide_values():
    with pytest.raises(ValueError):
        encrypt_word(1 << 32, identity_key())
    with pytest.raises(ValueError):
        encrypt_word(-1, identity_key())


def test_float_word_boundary():
    assert float_to_word(1.0) == 0x3F800000
    assert float_to_word(-0.0) == 0x80000000
    assert word_to_float(0x40490FDB) == pytest.approx(3.14159274)


def test_key_text_form():
    key = rotation_key(3)
    text = key_to_text(key)
    assert text.count(",") == WIDTH - 1
    assert key_from_text(f"  {text}\n") == key
    assert str(key) == text


def test_key_text_rejects_garbage():
    with pytest.raises(InvalidKey):
        key_from_text("0,1,2,x")
    with pytest.raises(InvalidKey):
        key_from_text(",".join(str(i) for i in range(31)))


def test_key_bytes_form(rng):
    key = PermutationKey.random(rng)
    assert key_from_bytes(key_to_bytes(key)) == key
    with pytest.raises(InvalidKey):
        key_from_bytes(b"\x00" * 31)


def test_key_array_is_read_only():
    arr = identity_key().array
    with pytest.raises(ValueError):
        arr[0] = 1
