"""Distortion and decoding losses, each returning (value, gradient)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fnn import FixedDecoder
from .keystream import StegoKey, derive_mask

# ceiling for the BCE terms that enter the objective with a negative sign
MAX_BCE_CEILING = 10.0


@dataclass(frozen=True)
class LossWeights:
    lambda_d: float = 40.0
    lambda_1: float = 5.0
    lambda_2: float = 0.05
    lambda_3: float = 0.05

    def __post_init__(self):
        for name in ("lambda_d", "lambda_1", "lambda_2", "lambda_3"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass
class LossReport:
    total: float
    d: float
    type1: float
    type2: float
    type3: float
    gradient: np.ndarray
    stage: int = 2

    def recombine(self, w: LossWeights) -> float:
        return w.lambda_d * self.d + w.lambda_1 * self.type1 - w.lambda_2 * self.type2 - w.lambda_3 * self.type3


def _same_shape(a, b, what):
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def distortion_loss(cover: np.ndarray, stego: np.ndarray, w: np.ndarray) -> tuple[float, np.ndarray]:
    """sqrt(sum(w * (cover - stego)^2) / N); gradient is zero where the loss is zero."""
    cover = np.asarray(cover, dtype=np.float64)
    stego = np.asarray(stego, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    _same_shape(cover, stego, "distortion_loss")
    _same_shape(cover, w, "distortion_loss cost")
    diff = stego - cover
    n = diff.size
    value = float(np.sqrt(np.sum(w * diff * diff) / n))
    if value == 0.0:
        return 0.0, np.zeros_like(diff)
    return value, w * diff / (n * value)


def bce_with_logits(logits: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy over all bits, stable log-sum-exp form."""
    z = np.asarray(logits, dtype=np.float64)
    m = np.asarray(target, dtype=np.float64)
    _same_shape(z, m, "bce_with_logits")
    per_bit = np.maximum(z, 0.0) - z * m + np.log1p(np.exp(-np.abs(z)))
    # sigmoid without overflow for large |z|
    e = np.exp(-np.abs(z))
    sig = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(per_bit.mean()), (sig - m) / z.size


def _masks(keys, shape, cache):
    out = []
    for k in keys:
        if cache is not None and (k, shape) in cache:
            out.append(cache[k, shape])
        else:
            m = derive_mask(k, shape)
            if cache is not None:
                cache[k, shape] = m
            out.append(m)
    return out


def _batched_bce(decoder: FixedDecoder, inputs: np.ndarray, msg: np.ndarray):
    """Per-input BCE values and their input gradients, in one decoder pass."""
    values = []

    def loss_fn(logits):
        grads = np.empty_like(logits)
        for i in range(logits.shape[0]):
            v, grads[i] = bce_with_logits(logits[i], msg)
            values.append(v)
        return None, grads

    _, grads = decoder.value_and_grad(inputs, loss_fn)
    return values, grads


def _check_msg(decoder, stego, msg):
    if msg.shape != (decoder.payload_depth,) + stego.shape[1:]:
        raise ValueError(f"message shape {msg.shape} does not match decoder output "
                         f"{(decoder.payload_depth,) + stego.shape[1:]}")


def type1_loss(stego, key: StegoKey, msg, decoder: FixedDecoder, mask_cache=None):
    """BCE between the decoding of the key-encrypted stego and the secret."""
    stego = np.asarray(stego, dtype=np.float64)
    _check_msg(decoder, stego, msg)
    (mask,) = _masks([key], stego.shape, mask_cache)
    values, grads = _batched_bce(decoder, (stego + mask)[None], msg)
    return values[0], grads[0]


def type2_loss(stego, msg, decoder: FixedDecoder):
    """BCE between the keyless decoding of the stego and the secret."""
    stego = np.asarray(stego, dtype=np.float64)
    _check_msg(decoder, stego, msg)
    values, grads = _batched_bce(decoder, stego[None], msg)
    return values[0], grads[0]


def type3_loss(stego, wrong_keys, msg, decoder: FixedDecoder, mask_cache=None):
    """Sum over wrong keys of the BCE of each encrypted decoding."""
    wrong_keys = list(wrong_keys)
    if not wrong_keys:
        raise ValueError("type3_loss needs at least one wrong key")
    stego = np.asarray(stego, dtype=np.float64)
    _check_msg(decoder, stego, msg)
    masks = _masks(wrong_keys, stego.shape, mask_cache)
    values, grads = _batched_bce(decoder, np.stack([stego + m for m in masks]), msg)
    return float(sum(values)), grads.sum(axis=0)


def total_loss(cover, stego, w, key: StegoKey, wrong_keys, msg, decoder: FixedDecoder,
               weights: LossWeights = LossWeights(), stage: int = 2,
               mask_cache=None) -> LossReport:
    """Weighted objective. Stage 1 uses only distortion and Type-I terms.

    In stage 2 the Type-II and Type-III values are capped at MAX_BCE_CEILING
    (zero gradient beyond), since they are maximized.
    """
    if stage not in (1, 2):
        raise ValueError(f"stage must be 1 or 2, got {stage}")
    stego = np.asarray(stego, dtype=np.float64)
    _check_msg(decoder, stego, msg)
    d, gd = distortion_loss(cover, stego, w)
    grad = weights.lambda_d * gd

    use2 = stage == 2 and weights.lambda_2 > 0
    use3 = stage == 2 and weights.lambda_3 > 0 and len(wrong_keys) > 0
    keys = [key] + (list(wrong_keys) if use3 else [])
    masks = _masks(keys, stego.shape, mask_cache)
    inputs = [stego + masks[0]]
    if use2:
        inputs.append(stego)
    inputs.extend(stego + m for m in masks[1:])
    values, grads = _batched_bce(decoder, np.stack(inputs), msg)

    t1 = values[0]
    grad += weights.lambda_1 * grads[0]
    t2 = t3 = 0.0
    i = 1
    if use2:
        t2 = values[1]
        if t2 < MAX_BCE_CEILING:
            grad -= weights.lambda_2 * grads[1]
        else:
            t2 = MAX_BCE_CEILING
        i = 2
    if use3:
        t3 = float(sum(values[i:]))
        if t3 < MAX_BCE_CEILING:
            grad -= weights.lambda_3 * grads[i:].sum(axis=0)
        else:
            t3 = MAX_BCE_CEILING
    report = LossReport(0.0, d, t1, t2, t3, grad, stage)
    report.total = report.recombine(weights)
    return report
