import numpy as np
import pytest

from shufflebits.keystream import MasterSecret, Nonce


@pytest.fixture
def rng():
    return np.random.default_rng(20210)


@pytest.fixture
def master():
    return MasterSecret(bytes(range(32)))


@pytest.fixture
def nonce():
    return Nonce(bytes(range(12)))


@pytest.fixture
def special_words():
    """Zero, signed zero, infinities, NaNs, denormals and the all-ones pattern."""
    return np.array(
        [
            0x00000000, 0x80000000, 0x7F800000, 0xFF800000,
            0x7FC00000, 0x7F800001, 0xFFFFFFFF, 0x00000001,
            0x007FFFFF, 0x80000001, 0x3F800000, 0x00400000,
        ],
        dtype=np.uint32,
    )
