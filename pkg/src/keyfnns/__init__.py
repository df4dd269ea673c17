"""Key-based fixed-neural-network image steganography.

A secret bit tensor is hidden in a cover image by optimising a small
perturbation so that a frozen decoder network recovers the bits, but only
after a key-derived mask has been added to the image.
"""
__version__ = "0.1.0"

from .embedder import EmbedConfig, EmbedError, EmbedResult, embed, extract  # noqa: E402
from .fnn import FixedDecoder, build_seeded, load_weights, save_weights  # noqa: E402
from .keystream import StegoKey, derive_mask, encrypt, random_message, wrong_key_set  # noqa: E402
from .losses import LossWeights  # noqa: E402

__all__ = [
    "EmbedConfig", "EmbedError", "EmbedResult", "embed", "extract",
    "FixedDecoder", "build_seeded", "load_weights", "save_weights",
    "StegoKey", "derive_mask", "encrypt", "random_message", "wrong_key_set",
    "LossWeights",
]
