"""Frozen convolutional decoder with exact input gradients.

Every layer is a stride-1, zero-padded "same" convolution; all but the
last are followed by a LeakyReLU. Weights never receive gradients.
"""
from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass

import numpy as np

from .keystream import StegoKey, Xoshiro256StarStar

MAGIC = b"KFNN1"
HIDDEN_CHANNELS = 32
NEGATIVE_SLOPE = 0.2
_DECODER_TAG = b"keyfnns:decoder\x00"


class WeightFileError(ValueError):
    pass


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ConvLayer:
    weight: np.ndarray  # (out, in, kh, kw)
    bias: np.ndarray    # (out,)

    def __post_init__(self):
        w = _freeze(self.weight)
        b = _freeze(self.bias)
        if w.ndim != 4 or w.shape[2] % 2 == 0 or w.shape[3] % 2 == 0:
            raise ValueError(f"kernel must be (out, in, odd, odd), got {w.shape}")
        if b.shape != (w.shape[0],):
            raise ValueError(f"bias shape {b.shape} does not match {w.shape[0]} outputs")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    # activations are laid out (C, N, H, W) so each layer is one GEMM
    def forward(self, x: np.ndarray) -> np.ndarray:
        cin, n, h, w = x.shape
        kh, kw = self.weight.shape[2:]
        ph, pw = kh // 2, kw // 2
        xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        cols = np.empty((cin, kh, kw, n, h, w))
        for i in range(kh):
            for j in range(kw):
                cols[:, i, j] = xp[:, :, i:i + h, j:j + w]
        y = self.weight.reshape(self.out_channels, -1) @ cols.reshape(cin * kh * kw, -1)
        y += self.bias[:, None]
        return y.reshape(self.out_channels, n, h, w)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        cout, n, h, w = dy.shape
        kh, kw = self.weight.shape[2:]
        ph, pw = kh // 2, kw // 2
        dcols = self.weight.reshape(cout, -1).T @ dy.reshape(cout, -1)
        dcols = dcols.reshape(self.in_channels, kh, kw, n, h, w)
        dxp = np.zeros((self.in_channels, n, h + 2 * ph, w + 2 * pw))
        for i in range(kh):
            for j in range(kw):
                dxp[:, :, i:i + h, j:j + w] += dcols[:, i, j]
        return dxp[:, :, ph:ph + h, pw:pw + w]


class FixedDecoder:
    """Frozen decoder F: (3, H, W) images to (D, H, W) logits."""

    def __init__(self, layers: list[ConvLayer], negative_slope: float = NEGATIVE_SLOPE):
        if not layers:
            raise ValueError("decoder needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_channels != nxt.in_channels:
                raise ValueError(f"layer channel mismatch: {prev.out_channels} -> {nxt.in_channels}")
        self._layers = tuple(layers)
        self.negative_slope = float(negative_slope)

    @property
    def layers(self) -> tuple[ConvLayer, ...]:
        return self._layers

    @property
    def in_channels(self) -> int:
        return self._layers[0].in_channels

    @property
    def payload_depth(self) -> int:
        return self._layers[-1].out_channels

    def fingerprint(self) -> str:
        return hashlib.sha256(to_bytes(self)).hexdigest()

    def _as_batch(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 3
        if single:
            x = x[None]
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ValueError(f"decoder expects {self.in_channels} input channels, got shape {x.shape}")
        return x, single

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Logits for one (C, H, W) image or an (N, C, H, W) batch."""
        x, single = self._as_batch(x)
        out, _ = self._forward(x)
        return out[0] if single else out

    def _forward(self, x):
        x = x.transpose(1, 0, 2, 3)
        pre = []
        for k, layer in enumerate(self._layers):
            x = layer.forward(x)
            if k < len(self._layers) - 1:
                pre.append(x)
                x = np.where(x > 0, x, self.negative_slope * x)
        return x.transpose(1, 0, 2, 3), pre

    def activation_pattern(self, x: np.ndarray) -> np.ndarray:
        """Signs of every hidden pre-activation, flattened per batch item."""
        x, single = self._as_batch(x)
        _, pre = self._forward(x)
        pat = np.concatenate([(p > 0).transpose(1, 0, 2, 3).reshape(x.shape[0], -1) for p in pre], axis=1)
        return pat[0] if single else pat

    def _backward(self, pre, dlogits):
        g = dlogits.transpose(1, 0, 2, 3)
        for k in range(len(self._layers) - 1, -1, -1):
            if k < len(self._layers) - 1:
                g = np.where(pre[k] > 0, g, self.negative_slope * g)
            g = self._layers[k].backward(g)
        return g.transpose(1, 0, 2, 3)

    def input_gradient(self, x: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
        """Reverse-mode gradient of <dlogits, F(x)> with respect to x."""
        x, single = self._as_batch(x)
        dlogits = np.asarray(dlogits, dtype=np.float64)
        if single:
            dlogits = dlogits[None]
        expected = (x.shape[0], self.payload_depth) + x.shape[2:]
        if dlogits.shape != expected:
            raise ValueError(f"logit gradient shape {dlogits.shape} != {expected}")
        _, pre = self._forward(x)
        g = self._backward(pre, dlogits)
        return g[0] if single else g

    def value_and_grad(self, x: np.ndarray, loss_fn):
        """Evaluate ``loss_fn(logits) -> (value, dlogits)`` and chain to the input."""
        x, single = self._as_batch(x)
        logits, pre = self._forward(x)
        value, dlogits = loss_fn(logits[0] if single else logits)
        dlogits = np.asarray(dlogits, dtype=np.float64)
        g = self._backward(pre, dlogits[None] if single else dlogits)
        return value, (g[0] if single else g)


def forward(f: FixedDecoder, img: np.ndarray) -> np.ndarray:
    return f.forward(img)


def input_gradient(f: FixedDecoder, img: np.ndarray, loss_grad: np.ndarray) -> np.ndarray:
    return f.input_gradient(img, loss_grad)


def decode_bits(logits: np.ndarray) -> np.ndarray:
    return (np.asarray(logits) > 0).astype(np.uint8)


def reference_architecture(payload_depth: int) -> list[tuple[int, int, int, int]]:
    """(in, out, kh, kw) per layer."""
    c = HIDDEN_CHANNELS
    return [(3, c, 3, 3), (c, c, 3, 3), (c, c, 3, 3), (c, payload_depth, 3, 3)]


def build_seeded(seed: StegoKey | bytes, payload_depth: int,
                 negative_slope: float = NEGATIVE_SLOPE) -> FixedDecoder:
    """Reference decoder with He-scaled uniform weights and zero biases.

    Weights are uniform on [-a, a] with a = sqrt(3) * sqrt(2 / fan_in), which
    has standard deviation sqrt(2 / fan_in); draws follow layer order and
    (out, in, kh, kw) order within a layer.
    """
    if payload_depth < 1:
        raise ValueError("payload depth must be >= 1")
    raw = seed.seed if isinstance(seed, StegoKey) else bytes(seed)
    gen = Xoshiro256StarStar.from_seed(hashlib.sha256(_DECODER_TAG + raw).digest())
    layers = []
    for cin, cout, kh, kw in reference_architecture(payload_depth):
        fan_in = cin * kh * kw
        bound = np.sqrt(3.0) * np.sqrt(2.0 / fan_in)
        u = gen.random(cout * cin * kh * kw)
        w = ((2.0 * u - 1.0) * bound).reshape(cout, cin, kh, kw)
        layers.append(ConvLayer(w, np.zeros(cout)))
    return FixedDecoder(layers, negative_slope)


def to_bytes(f: FixedDecoder) -> bytes:
    parts = [MAGIC, struct.pack("<I", len(f.layers))]
    for layer in f.layers:
        cout, cin, kh, kw = layer.weight.shape
        parts.append(struct.pack("<4I", cin, cout, kh, kw))
    for layer in f.layers:
        parts.append(layer.weight.astype("<f8").tobytes())
        parts.append(layer.bias.astype("<f8").tobytes())
    return b"".join(parts)


def from_bytes(blob: bytes, negative_slope: float = NEGATIVE_SLOPE) -> FixedDecoder:
    if blob[:4] == MAGIC[:4] and blob[:5] != MAGIC:
        raise WeightFileError(f"unsupported weight file version {blob[:5]!r}, expected {MAGIC!r}")
    if blob[:5] != MAGIC:
        raise WeightFileError("not a decoder weight file (bad magic)")
    pos = len(MAGIC)
    if len(blob) < pos + 4:
        raise WeightFileError("truncated weight file header")
    (count,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    if count < 1 or len(blob) < pos + 16 * count:
        raise WeightFileError("truncated or invalid architecture descriptor")
    dims = []
    for _ in range(count):
        dims.append(struct.unpack_from("<4I", blob, pos))
        pos += 16
    expected = pos + 8 * sum(cout * cin * kh * kw + cout for cin, cout, kh, kw in dims)
    if len(blob) != expected:
        raise WeightFileError(f"weight file has {len(blob)} bytes, descriptor implies {expected}")
    layers = []
    try:
        for cin, cout, kh, kw in dims:
            nw = cout * cin * kh * kw
            w = np.frombuffer(blob, dtype="<f8", count=nw, offset=pos).reshape(cout, cin, kh, kw)
            pos += 8 * nw
            b = np.frombuffer(blob, dtype="<f8", count=cout, offset=pos)
            pos += 8 * cout
            layers.append(ConvLayer(w, b))
        return FixedDecoder(layers, negative_slope)
    except ValueError as exc:
        raise WeightFileError(f"inconsistent architecture: {exc}") from exc


def save_weights(f: FixedDecoder, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(f))


def load_weights(path: str | os.PathLike) -> FixedDecoder:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
