"""Fast built-in checks against independent oracles (no test runner needed)."""
from __future__ import annotations

import io
import time

import numpy as np

from . import cost, fnn, losses, metrics, png
from .keystream import StegoKey, Xoshiro256StarStar, derive_mask, random_message, splitmix64, wrong_key_set
from .lbfgs import lbfgs_minimize


def finite_difference(f, x, h=1e-3):
    g = np.empty_like(x)
    flat, gf = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f(x)
        flat[i] = old - h
        fm = f(x)
        flat[i] = old
        gf[i] = (fp - fm) / (2 * h)
    return g


def probe_batch(x, h, index=None):
    """x +- h e_i for the coordinates ``index`` (default all), stacked on a batch axis."""
    index = np.arange(x.size) if index is None else np.asarray(index)
    eye = np.zeros((index.size, x.size))
    eye[np.arange(index.size), index] = h
    eye = eye.reshape((index.size,) + x.shape)
    return np.concatenate([x[None] + eye, x[None] - eye])


def kink_free(dec, inputs, h, chunk=24) -> bool:
    """True when no central-difference probe moves any hidden unit across its kink.

    Central differences only approximate the derivative of a piecewise
    linear network where the activation pattern is constant on the probe
    interval, so gradient checks are run at such points.
    """
    for v in inputs:
        base = dec.activation_pattern(v)
        for start in range(0, v.size, chunk):
            idx = np.arange(start, min(start + chunk, v.size))
            if np.any(dec.activation_pattern(probe_batch(v, h, idx)) != base):
                return False
    return True


def smooth_point(dec, shape, decoder_inputs, h=1e-3, tries=2000, lo=0.05, hi=0.95):
    for seed in range(tries):
        x = np.random.default_rng([0xFD, seed]).uniform(lo, hi, shape)
        if kink_free(dec, decoder_inputs(x), h):
            return x
    raise RuntimeError("no kink-free sample point found")


def relative_error(a, b) -> float:
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12))


def naive_conv(x, weight, bias):
    """Zero-padded 'same' cross-correlation with explicit loops."""
    cin, h, w = x.shape
    cout, _, kh, kw = weight.shape
    ph, pw = kh // 2, kw // 2
    out = np.zeros((cout, h, w))
    for o in range(cout):
        for i in range(h):
            for j in range(w):
                acc = bias[o]
                for c in range(cin):
                    for a in range(kh):
                        for b in range(kw):
                            y, z = i + a - ph, j + b - pw
                            if 0 <= y < h and 0 <= z < w:
                                acc += weight[o, c, a, b] * x[c, y, z]
                out[o, i, j] = acc
    return out


def naive_forward(dec, x):
    for k, layer in enumerate(dec.layers):
        x = naive_conv(x, layer.weight, layer.bias)
        if k < len(dec.layers) - 1:
            x = np.where(x > 0, x, dec.negative_slope * x)
    return x


def _check_prng():
    assert splitmix64(0)[1] == 0xE220A8397B1DCDAF
    gen = Xoshiro256StarStar((1, 2, 3, 4))
    assert gen.next_block(4) == [11520, 0, 1509978240, 1215971899390074240]


def gradient_cases(h=1e-3, shape=(3, 8, 8), n_wrong=2):
    """(name, loss function, sample point) for every loss term on the seeded decoder."""
    dec = fnn.build_seeded(StegoKey.from_int(3), 1)
    key = StegoKey.from_int(11)
    wrong = wrong_key_set(key, n_wrong)
    msg = random_message(key, (1,) + shape[1:])
    cover = np.random.default_rng(5).uniform(0, 1, shape)
    w = cost.hill_cost(cover)
    mask = {k: derive_mask(k, shape) for k in [key] + wrong}
    cases = [
        ("distortion", lambda v: losses.distortion_loss(cover, v, w), lambda x: []),
        ("type1", lambda v: losses.type1_loss(v, key, msg, dec), lambda x: [x + mask[key]]),
        ("type2", lambda v: losses.type2_loss(v, msg, dec), lambda x: [x]),
        ("type3", lambda v: losses.type3_loss(v, wrong, msg, dec),
         lambda x: [x + mask[k] for k in wrong]),
    ]
    return [(name, fn, smooth_point(dec, shape, inputs, h)) for name, fn, inputs in cases]


def _check_gradients():
    for name, fn, x in gradient_cases():
        _, g = fn(x)
        num = finite_difference(lambda v: fn(v)[0], x.copy())
        err = relative_error(g, num)
        assert err < 1e-4, f"{name} gradient relative error {err:.2e}"


def _check_conv_oracle():
    rng = np.random.default_rng(1)
    dec = fnn.build_seeded(StegoKey.from_int(5), 2)
    x = rng.uniform(-1, 2, (3, 8, 8))
    assert np.max(np.abs(dec.forward(x) - naive_forward(dec, x))) < 1e-9


def _check_hill_oracle():
    rng = np.random.default_rng(2)
    plane = rng.uniform(0, 1, (9, 9))
    k = np.array([[-1, 2, -1], [2, -4, 2], [-1, 2, -1]], dtype=np.float64)
    padded = np.pad(plane, 1, mode="symmetric")
    ref = np.array([[np.sum(padded[i:i + 3, j:j + 3] * k) for j in range(9)] for i in range(9)])
    assert np.max(np.abs(cost.convolve2d(plane, k) - ref)) < 1e-12


def _check_lbfgs():
    c = np.linspace(-1, 1, 12).reshape(3, 2, 2)
    x = lbfgs_minimize(lambda v: (float(np.sum((v - c) ** 2)), 2 * (v - c)), np.zeros_like(c), 50)
    assert np.linalg.norm(x - c) < 1e-8


def _check_png():
    img = np.stack([np.array([[0, 85], [170, 255]], dtype=np.uint8)] * 3, axis=-1)
    assert np.array_equal(png.decode(png.encode(img)), img)
    buf = io.BytesIO(png.encode(img))
    assert buf.getvalue()[:8] == png.SIGNATURE


def _check_metrics():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 256, (3, 16, 16))
    b = np.clip(a + rng.integers(-3, 4, a.shape), 0, 255)
    mse = np.mean((a - b) ** 2.0)
    assert abs(metrics.psnr(a, b) - 10 * np.log10(255.0 ** 2 / mse)) < 1e-9
    assert metrics.ssim(a, a) == 1.0
    m = rng.integers(0, 2, (1, 4, 4))
    assert metrics.ber(m, 1 - m) == 1.0


CHECKS = (
    ("prng golden vectors", _check_prng),
    ("png round trip", _check_png),
    ("decoder vs nested-loop convolution", _check_conv_oracle),
    ("high-pass filter vs nested loops", _check_hill_oracle),
    ("loss gradients vs finite differences", _check_gradients),
    ("l-bfgs on a quadratic", _check_lbfgs),
    ("psnr / ssim / ber identities", _check_metrics),
)


def run(out=print) -> bool:
    ok = True
    for name, check in CHECKS:
        start = time.perf_counter()
        try:
            check()
            status = "ok"
        except AssertionError as exc:
            ok = False
            status = f"FAILED: {exc}"
        out(f"{name:<40} {status} ({time.perf_counter() - start:.2f}s)")
    return ok
