"""Bit error rate, PSNR and SSIM on 8-bit images."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_VALUE = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class QualityReport:
    ber: float
    psnr: float
    ssim: float


def _check(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def ber(a: np.ndarray, b: np.ndarray) -> float:
    a, b = _check(a, b)
    if a.size == 0:
        raise ValueError("empty message")
    return float(np.count_nonzero(a.astype(bool) != b.astype(bool))) / a.size


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    a, b = _check(a, b)
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(MAX_VALUE ** 2 / mse))


def gaussian_kernel_1d(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _filter_valid(plane: np.ndarray, k: np.ndarray) -> np.ndarray:
    # separable 'valid' filtering: rows then columns
    n = k.size
    h, w = plane.shape
    rows = sum(k[i] * plane[:, i:w - n + 1 + i] for i in range(n))
    return sum(k[i] * rows[i:h - n + 1 + i, :] for i in range(n))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean SSIM over the valid window positions, averaged over channels.

    Accepts (C, H, W) or (H, W) arrays of 8-bit intensities.
    """
    a, b = _check(a, b)
    if a.ndim == 2:
        a, b = a[None], b[None]
    if a.shape[-1] < SSIM_WINDOW or a.shape[-2] < SSIM_WINDOW:
        raise ValueError(f"image {a.shape[-2:]} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    k = gaussian_kernel_1d()
    c1 = (SSIM_K1 * MAX_VALUE) ** 2
    c2 = (SSIM_K2 * MAX_VALUE) ** 2
    scores = []
    for x, y in zip(a.astype(np.float64), b.astype(np.float64)):
        mx, my = _filter_valid(x, k), _filter_valid(y, k)
        sxx = _filter_valid(x * x, k) - mx * mx
        syy = _filter_valid(y * y, k) - my * my
        sxy = _filter_valid(x * y, k) - mx * my
        num = (2 * mx * my + c1) * (2 * sxy + c2)
        den = (mx * mx + my * my + c1) * (sxx + syy + c2)
        scores.append(np.mean(num / den))
    return float(np.mean(scores))


def quality(msg: np.ndarray, decoded: np.ndarray, cover_q: np.ndarray, stego_q: np.ndarray) -> QualityReport:
    return QualityReport(ber(msg, decoded), psnr(cover_q, stego_q), ssim(cover_q, stego_q))
