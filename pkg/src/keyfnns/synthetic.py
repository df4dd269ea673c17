"""Procedural cover images for tests and demos.

The images mix smooth shading, flat shapes and textured patches so they
have both high- and low-cost regions, then pass through a display gamma
curve and 8-bit rounding like a camera pipeline would.
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter


def natural_image(seed: int, size: int = 64) -> np.ndarray:
    """Deterministic (3, size, size) uint8 cover."""
    rng = np.random.default_rng([0x5EED, seed])
    yy, xx = np.mgrid[0:size, 0:size] / float(size)
    img = np.empty((3, size, size))
    base = rng.uniform(0.2, 0.7, 3)
    tilt = rng.uniform(-0.25, 0.25, (3, 2))
    for c in range(3):
        img[c] = base[c] + tilt[c, 0] * (xx - 0.5) + tilt[c, 1] * (yy - 0.5)
    for _ in range(3):
        fx, fy = rng.uniform(0.5, 2.0, 2)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(0.02, 0.08, 3)
        wave = np.cos(2 * np.pi * (fx * xx + fy * yy) + phase)
        img += amp[:, None, None] * wave
    for _ in range(rng.integers(2, 5)):
        cy, cx = rng.uniform(0.1, 0.9, 2)
        ry, rx = rng.uniform(0.08, 0.3, 2)
        inside = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 < 1.0
        edge = gaussian_filter(inside.astype(np.float64), 0.8)
        color = rng.uniform(0.05, 0.95, 3)
        img = img * (1 - edge) + color[:, None, None] * edge
    for _ in range(rng.integers(1, 3)):
        y0, x0 = rng.integers(0, size // 2, 2)
        h, w = rng.integers(size // 4, size // 2 + 1, 2)
        texture = gaussian_filter(rng.normal(0.0, 1.0, (3, h, w)), (0, 0.7, 0.7))
        img[:, y0:y0 + h, x0:x0 + w] += rng.uniform(0.08, 0.2) * texture
    img += rng.normal(0.0, 0.8 / 255.0, img.shape)
    img = np.clip(img, 0.0, 1.0) ** (1.0 / 1.15)
    return np.clip(np.floor(img * 255.0 + 0.5), 0, 255).astype(np.uint8)


def corpus(count: int, size: int = 64, start: int = 0) -> list[np.ndarray]:
    return [natural_image(start + i, size) for i in range(count)]


def lsb_randomize(img: np.ndarray, seed: int, rate: float = 1.0) -> np.ndarray:
    """LSB replacement with random bits on a fraction ``rate`` of the samples."""
    rng = np.random.default_rng([0x15B, seed])
    img = np.asarray(img, dtype=np.uint8)
    chosen = rng.random(img.shape) < rate
    bits = rng.integers(0, 2, img.shape, dtype=np.uint8)
    out = img.copy()
    out[chosen] = (img[chosen] & 0xFE) | bits[chosen]
    return out
