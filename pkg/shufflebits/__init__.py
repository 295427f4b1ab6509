# package marker
from .bitperm import (
    PermutationKey,
    decrypt_word,
    encrypt_word,
    invert_key,
    rotation_key,
    validate_key,
)
from .codec import FeatureBatch, decrypt_batch, encrypt_batch, encrypt_batch_bitsliced
from .envelope import open_envelope, seal
from .keystream import KeyMode, MasterSecret, Nonce, generate_master

__version__ = "0.1.0"
