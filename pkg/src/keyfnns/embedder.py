"""Two-stage, quantization-aware embedding and key-based extraction."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import metrics
from .cost import DEFAULT_T_LARGE, DEFAULT_T_SMALL, hill_cost
from .fnn import FixedDecoder, decode_bits
from .image import check_image, clip01, dequantize, quantize
from .keystream import StegoKey, derive_mask, wrong_key_set
from .lbfgs import NonFiniteObjective, lbfgs_minimize
from .losses import LossReport, LossWeights, total_loss

log = logging.getLogger(__name__)

TRACE_FIELDS = ("iteration", "epoch", "stage", "total", "d", "type1", "type2", "type3")
EARLY_EXIT_PATIENCE = 3


class EmbedError(RuntimeError):
    def __init__(self, message: str, trace: list[dict] | None = None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(frozen=True)
class EmbedConfig:
    alpha: float = 0.10
    epochs: int = 100
    st1: int = 15
    st2: int = 15
    weights: LossWeights = field(default_factory=LossWeights)
    n_wrong: int = 3
    lbfgs_memory: int = 10
    two_stage: bool = True
    iterative_quantize: bool = True
    use_cost: bool = True
    early_exit: bool = True
    cost_t: float = DEFAULT_T_SMALL
    cost_T: float = DEFAULT_T_LARGE

    def __post_init__(self):
        for name in ("epochs", "st1", "n_wrong", "lbfgs_memory"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.st2 < 0 or (self.st2 == 0 and self.two_stage):
            raise ValueError("st2 must be >= 1 (it may be 0 only when two_stage is off)")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def with_weights(self, **kw) -> "EmbedConfig":
        return replace(self, weights=replace(self.weights, **kw))

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, LossWeights):
                out.update({k.name: getattr(v, k.name) for k in fields(v)})
            else:
                out[f.name] = v
        return out


@dataclass
class EmbedResult:
    stego: np.ndarray          # (3, H, W) uint8
    ber_correct: float
    ber_nokey: float
    ber_wrong: float           # mean over the wrong-key set
    ber_wrong_each: list[float]
    psnr: float
    ssim: float
    epochs_run: int
    trace: list[dict] = field(default_factory=list)


def extract(stego: np.ndarray, key: StegoKey | None, decoder: FixedDecoder) -> np.ndarray:
    """Decode the secret bits; without a key the stego is decoded directly."""
    x = np.asarray(stego)
    if x.dtype == np.uint8:
        x = dequantize(x)
    x = check_image(x, "stego")
    if key is not None:
        x = x + derive_mask(key, x.shape)
    return decode_bits(decoder.forward(x))


def _evaluate(stego_q, cover_q, msg, key, wrong, decoder):
    wrong_bers = [metrics.ber(msg, extract(stego_q, k, decoder)) for k in wrong]
    return dict(
        ber_correct=metrics.ber(msg, extract(stego_q, key, decoder)),
        ber_nokey=metrics.ber(msg, extract(stego_q, None, decoder)),
        ber_wrong=float(np.mean(wrong_bers)),
        ber_wrong_each=wrong_bers,
        psnr=metrics.psnr(cover_q, stego_q),
        ssim=metrics.ssim(cover_q, stego_q),
    )


def embed(cover: np.ndarray, msg: np.ndarray, key: StegoKey, decoder: FixedDecoder,
          cfg: EmbedConfig = EmbedConfig(), on_trace=None) -> EmbedResult:
    """Optimize a key-controlled perturbation so that ``extract(stego, key)`` yields ``msg``.

    Each epoch runs ``st1`` L-BFGS steps on distortion + Type-I loss and
    ``st2`` steps on the full objective (or one block of ``st1 + st2`` steps
    on the full objective when ``two_stage`` is off), then clips to [0, 1]
    and, with ``iterative_quantize``, snaps to the 8-bit grid. Optimizer
    memory is reset for every block. With ``early_exit`` the loop stops once
    BER(correct key) has been zero for three epochs, or as soon as an epoch
    returns exactly the iterate it started from.
    """
    if cover.dtype == np.uint8:
        cover = dequantize(cover)
    cover = check_image(cover, "cover")
    if cover.min() < 0 or cover.max() > 1:
        raise ValueError("cover intensities must lie in [0, 1]")
    msg = np.asarray(msg, dtype=np.uint8)
    expected = (decoder.payload_depth,) + cover.shape[1:]
    if msg.shape != expected:
        raise ValueError(f"message shape {msg.shape} does not match decoder payload {expected}")

    w = hill_cost(cover, cfg.cost_t, cfg.cost_T) if cfg.use_cost else np.ones_like(cover)
    wrong = wrong_key_set(key, cfg.n_wrong)
    cache: dict = {}
    trace: list[dict] = []
    state = {"report": None, "epoch": 0}

    def objective(stage):
        def f(x):
            rep = total_loss(cover, x, w, key, wrong, msg, decoder, cfg.weights, stage, cache)
            state["report"] = rep
            return rep.total, rep.gradient
        return f

    def record(stage):
        def cb(_k, _x, _fx):
            rep: LossReport = state["report"]
            row = dict(iteration=len(trace), epoch=state["epoch"], stage=stage, total=rep.total,
                       d=rep.d, type1=rep.type1, type2=rep.type2, type3=rep.type3)
            if not np.isfinite(rep.total):
                raise EmbedError("non-finite loss during embedding", trace)
            trace.append(row)
            if on_trace is not None:
                on_trace(row)
        return cb

    def run_block(x, stage, steps):
        try:
            return lbfgs_minimize(objective(stage), x, steps, cfg.alpha, cfg.lbfgs_memory,
                                  callback=record(stage))
        except NonFiniteObjective as exc:
            raise EmbedError(str(exc), trace) from exc

    x = cover.copy()
    streak = 0
    epochs_run = 0
    for epoch in range(cfg.epochs):
        state["epoch"] = epoch
        before = x
        if cfg.two_stage:
            x = run_block(x, 1, cfg.st1)
            x = run_block(x, 2, cfg.st2)
        else:
            x = run_block(x, 2, cfg.st1 + cfg.st2)
        x = clip01(x)
        if cfg.iterative_quantize:
            x = dequantize(quantize(x))
        epochs_run = epoch + 1
        ber_now = metrics.ber(msg, extract(quantize(x), key, decoder))
        log.debug("epoch %d: ber(correct)=%.5f", epoch, ber_now)
        streak = streak + 1 if ber_now == 0.0 else 0
        if cfg.early_exit and streak >= EARLY_EXIT_PATIENCE:
            break
        if cfg.early_exit and np.array_equal(x, before):
            # an epoch is a deterministic map of the iterate, so a fixed point stays fixed
            log.debug("epoch %d left the iterate unchanged; stopping", epoch)
            break

    stego_q = quantize(x)
    scores = _evaluate(stego_q, quantize(cover), msg, key, wrong, decoder)
    return EmbedResult(stego=stego_q, epochs_run=epochs_run, trace=trace, **scores)
