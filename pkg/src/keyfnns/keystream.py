"""Key handling and deterministic random streams.

A key is a 256-bit seed. Streams are xoshiro256** generators whose four
64-bit lanes are obtained by passing each big-endian 64-bit word of the
seed through one SplitMix64 step. Reals take the top 53 bits of each
output, giving values in [0, 1).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# domain tags, so one seed never yields correlated streams for different uses
_MESSAGE_TAG = b"keyfnns:message\x00"
_WRONG_KEY_TAG = b"keyfnns:wrong-key\x00"


def splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step: returns (new_state, output)."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class Xoshiro256StarStar:
    def __init__(self, state: tuple[int, int, int, int]):
        if not any(state):
            raise ValueError("xoshiro256** state must not be all zero")
        self.s = [int(v) & MASK64 for v in state]

    @classmethod
    def from_seed(cls, seed: bytes) -> "Xoshiro256StarStar":
        if len(seed) != 32:
            raise ValueError(f"seed must be 32 bytes, got {len(seed)}")
        lanes = []
        for i in range(4):
            word = int.from_bytes(seed[8 * i:8 * i + 8], "big")
            lanes.append(splitmix64(word)[1])
        if not any(lanes):
            lanes[0] = GOLDEN_GAMMA
        return cls(tuple(lanes))

    def next_u64(self) -> int:
        return self.next_block(1)[0]

    def next_block(self, n: int) -> list[int]:
        s0, s1, s2, s3 = self.s
        out = [0] * n
        for i in range(n):
            r = (s1 * 5) & MASK64
            r = (((r << 7) | (r >> 57)) & MASK64) * 9 & MASK64
            out[i] = r
            t = (s1 << 17) & MASK64
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
        self.s = [s0, s1, s2, s3]
        return out

    def random(self, n: int) -> np.ndarray:
        """n reals in [0, 1) built from the top 53 bits of each output."""
        words = np.array(self.next_block(n), dtype=np.uint64)
        return (words >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)

    def bits(self, n: int) -> np.ndarray:
        """n bits taken from the most significant bit of each output."""
        words = np.array(self.next_block(n), dtype=np.uint64)
        return (words >> np.uint64(63)).astype(np.uint8)


@dataclass(frozen=True)
class StegoKey:
    """A 256-bit key. The null key is a test fixture whose mask is all zeros."""

    seed: bytes
    null: bool = field(default=False, compare=True)

    def __post_init__(self):
        if len(self.seed) != 32:
            raise ValueError(f"key seed must be 256 bits, got {8 * len(self.seed)}")

    @classmethod
    def from_hex(cls, text: str) -> "StegoKey":
        text = text.strip().lower()
        if text.startswith("0x"):
            text = text[2:]
        if len(text) != 64:
            raise ValueError(f"hex key must have 64 digits, got {len(text)}")
        try:
            return cls(bytes.fromhex(text))
        except ValueError as exc:
            raise ValueError(f"invalid hex key: {exc}") from exc

    @classmethod
    def from_passphrase(cls, passphrase: str) -> "StegoKey":
        return cls(hashlib.sha256(passphrase.encode("utf-8")).digest())

    @classmethod
    def from_int(cls, value: int) -> "StegoKey":
        return cls(int(value).to_bytes(32, "big"))

    @classmethod
    def null_key(cls) -> "StegoKey":
        return cls(bytes(32), null=True)

    def hex(self) -> str:
        return self.seed.hex()

    def stream(self) -> Xoshiro256StarStar:
        return Xoshiro256StarStar.from_seed(self.seed)

    def __repr__(self) -> str:
        return f"StegoKey({'null' if self.null else self.hex()[:16] + '...'})"


def derive_mask(key: StegoKey, shape: tuple[int, int, int]) -> np.ndarray:
    """Key-derived mask, uniform on [-1, 1), in channel-major row-major order."""
    shape = tuple(int(s) for s in shape)
    if len(shape) != 3 or min(shape) < 1:
        raise ValueError(f"mask shape must be three positive dims, got {shape}")
    n = shape[0] * shape[1] * shape[2]
    if key.null:
        return np.zeros(shape)
    return (2.0 * key.stream().random(n) - 1.0).reshape(shape)


def encrypt(img: np.ndarray, key: StegoKey, mask: np.ndarray | None = None) -> np.ndarray:
    """Add the key mask element-wise. No clipping: the result feeds the decoder."""
    img = np.asarray(img, dtype=np.float64)
    if mask is None:
        mask = derive_mask(key, img.shape)
    return img + mask


def _tagged(tag: bytes, seed: bytes, suffix: bytes = b"") -> bytes:
    return hashlib.sha256(tag + seed + suffix).digest()


def random_message(key: StegoKey, shape: tuple[int, int, int]) -> np.ndarray:
    """Bernoulli(0.5) bit tensor of shape (D, H, W), deterministic in key."""
    shape = tuple(int(s) for s in shape)
    if len(shape) != 3 or min(shape) < 1:
        raise ValueError(f"message shape must be three positive dims, got {shape}")
    gen = Xoshiro256StarStar.from_seed(_tagged(_MESSAGE_TAG, key.seed))
    return gen.bits(shape[0] * shape[1] * shape[2]).reshape(shape)


def wrong_key_set(correct: StegoKey, n: int) -> list[StegoKey]:
    """n distinct keys, all different from ``correct``; a prefix-stable sequence."""
    if n < 1:
        raise ValueError("need at least one wrong key")
    keys: list[StegoKey] = []
    counter = 0
    while len(keys) < n:
        cand = StegoKey(_tagged(_WRONG_KEY_TAG, correct.seed, counter.to_bytes(4, "big")))
        counter += 1
        if cand.seed != correct.seed and cand not in keys:
            keys.append(cand)
    return keys
