"""Run configuration: embedding parameters plus key, model and path sources.

The on-disk format is plain text, one ``key = value`` per line; ``#``
starts a comment. Unknown keys are rejected so typos do not silently fall
back to defaults.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .embedder import EmbedConfig
from .fnn import FixedDecoder, build_seeded, load_weights
from .keystream import StegoKey, random_message
from .losses import LossWeights

KEY_ENV = "KEYFNNS_KEY"
PASSPHRASE_ENV = "KEYFNNS_PASSPHRASE"
DEFAULT_DECODER_SEED = "keyfnns reference decoder"
LENGTH_BITS = 32


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # optimisation (defaults are the published settings)
    alpha: float = 0.10
    epochs: int = 100
    st1: int = 15
    st2: int = 15
    lambda_d: float = 40.0
    lambda_1: float = 5.0
    lambda_2: float = 0.05
    lambda_3: float = 0.05
    n_wrong: int = 3
    lbfgs_memory: int = 10
    two_stage: bool = True
    iterative_quantize: bool = True
    use_cost: bool = True
    early_exit: bool = True
    cost_t: float = 0.5
    cost_T: float = 3.0
    # payload
    bpp: int = 1
    payload: str = "random"
    # model source: seeded reference network, the periodic demo network, or a weight file
    decoder: str = "seeded"
    decoder_seed: str = DEFAULT_DECODER_SEED
    weights: str = ""
    # key source; the key itself is never stored in a config file
    key_env: str = KEY_ENV
    # paths
    cover: str = ""
    out: str = ""
    trace: str = ""

    def __post_init__(self):
        if self.bpp < 1:
            raise ConfigError("bpp must be >= 1")
        if self.decoder not in ("seeded", "periodic"):
            raise ConfigError(f"decoder must be 'seeded' or 'periodic', got {self.decoder!r}")
        try:
            self.embed_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def embed_config(self) -> EmbedConfig:
        weights = LossWeights(self.lambda_d, self.lambda_1, self.lambda_2, self.lambda_3)
        return EmbedConfig(alpha=self.alpha, epochs=self.epochs, st1=self.st1, st2=self.st2,
                           weights=weights, n_wrong=self.n_wrong, lbfgs_memory=self.lbfgs_memory,
                           two_stage=self.two_stage, iterative_quantize=self.iterative_quantize,
                           use_cost=self.use_cost, early_exit=self.early_exit,
                           cost_t=self.cost_t, cost_T=self.cost_T)

    def with_published_defaults(self) -> "RunConfig":
        """Reset every optimisation field to the published values, keeping sources and paths."""
        base = RunConfig()
        return replace(self, **{name: getattr(base, name) for name in OPTIMISATION_FIELDS})

    def updated(self, **changes) -> "RunConfig":
        unknown = set(changes) - FIELD_NAMES
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        return replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        return (base or cls()).updated(**parse_assignments(text.splitlines()))

    @classmethod
    def load(cls, path, base: "RunConfig | None" = None) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), base)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    def build_decoder(self) -> FixedDecoder:
        if self.weights:
            dec = load_weights(self.weights)
        elif self.decoder == "periodic":
            from .periodic import build_periodic
            if self.bpp != 1:
                raise ConfigError("the periodic decoder carries exactly 1 bit per pixel")
            dec = build_periodic()
        else:
            dec = build_seeded(parse_key(self.decoder_seed), self.bpp)
        if dec.payload_depth != self.bpp:
            raise ConfigError(f"decoder carries {dec.payload_depth} bit(s) per pixel, bpp is {self.bpp}")
        return dec


OPTIMISATION_FIELDS = ("alpha", "epochs", "st1", "st2", "lambda_d", "lambda_1", "lambda_2",
                       "lambda_3", "n_wrong", "lbfgs_memory", "two_stage", "iterative_quantize",
                       "use_cost", "early_exit", "cost_t", "cost_T")
FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
FIELD_NAMES = frozenset(FIELD_TYPES)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(name: str, raw: str):
    kind = FIELD_TYPES[name]
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind}") from None
    return raw


def parse_assignments(lines) -> dict:
    """Parse ``key = value`` lines (blank lines and # comments ignored)."""
    out = {}
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {num}: expected 'key = value', got {line!r}")
        name, raw = (part.strip() for part in line.split("=", 1))
        if name not in FIELD_NAMES:
            raise ConfigError(f"line {num}: unknown config field {name!r}")
        out[name] = _convert(name, raw)
    return out


def parse_key(text: str) -> StegoKey:
    """64 hex digits are taken literally; anything else is hashed as a passphrase."""
    text = text.strip()
    if len(text) == 64:
        try:
            return StegoKey.from_hex(text)
        except ValueError:
            pass
    return StegoKey.from_passphrase(text)


def resolve_key(key_hex: str | None, passphrase: str | None, env_name: str = KEY_ENV) -> StegoKey | None:
    if key_hex and passphrase:
        raise ConfigError("give either --key or --passphrase, not both")
    if key_hex:
        try:
            return StegoKey.from_hex(key_hex)
        except ValueError as exc:
            raise ConfigError(f"--key: {exc}") from exc
    if passphrase:
        return StegoKey.from_passphrase(passphrase)
    if os.environ.get(env_name):
        try:
            return StegoKey.from_hex(os.environ[env_name])
        except ValueError as exc:
            raise ConfigError(f"${env_name}: {exc}") from exc
    if os.environ.get(PASSPHRASE_ENV):
        return StegoKey.from_passphrase(os.environ[PASSPHRASE_ENV])
    return None


# payload framing ------------------------------------------------------------

def frame_payload(data: bytes, key: StegoKey, shape: tuple[int, int, int]) -> np.ndarray:
    """Message tensor: 32-bit big-endian byte length, the bits, then keyed filler."""
    capacity = int(np.prod(shape))
    need = LENGTH_BITS + 8 * len(data)
    if need > capacity:
        raise ConfigError(f"payload of {len(data)} bytes needs {need} bits; capacity is {capacity}")
    head = np.unpackbits(np.frombuffer(len(data).to_bytes(4, "big") + data, dtype=np.uint8))
    msg = random_message(key, shape).ravel().copy()
    msg[:need] = head
    return msg.reshape(shape)


def unframe_payload(bits: np.ndarray) -> bytes | None:
    """Inverse of :func:`frame_payload`; None when the length prefix cannot be valid."""
    flat = np.asarray(bits, dtype=np.uint8).ravel()
    if flat.size < LENGTH_BITS:
        return None
    length = int.from_bytes(np.packbits(flat[:LENGTH_BITS]).tobytes(), "big")
    if LENGTH_BITS + 8 * length > flat.size:
        return None
    return np.packbits(flat[LENGTH_BITS:LENGTH_BITS + 8 * length]).tobytes()
