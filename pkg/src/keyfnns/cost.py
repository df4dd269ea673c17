"""HILL-style per-pixel perturbation cost.

High cost on smooth content, low cost on texture. The cost is computed
per channel on 8-bit intensities (the truncation thresholds t=0.5 and
T=3 are only meaningful on that scale).
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

HIGH_PASS = np.array([[-1.0, 2.0, -1.0],
                      [2.0, -4.0, 2.0],
                      [-1.0, 2.0, -1.0]])
LOW_PASS_1 = np.full((3, 3), 1.0 / 9.0)
LOW_PASS_2 = np.full((15, 15), 1.0 / 225.0)

DEFAULT_T_SMALL = 0.5
DEFAULT_T_LARGE = 3.0
DEFAULT_EPS = 1e-10
INTENSITY_SCALE = 255.0


def convolve2d(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Same-size correlation with mirror padding (edge sample repeated)."""
    plane = np.asarray(plane, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    kh, kw = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"kernel dimensions must be odd, got {kernel.shape}")
    padded = np.pad(plane, ((kh // 2, kh // 2), (kw // 2, kw // 2)), mode="symmetric")
    windows = sliding_window_view(padded, (kh, kw))
    return np.einsum("hwij,ij->hw", windows, kernel)


def hill_cost(cover: np.ndarray, t: float = DEFAULT_T_SMALL, T: float = DEFAULT_T_LARGE,
              eps: float = DEFAULT_EPS, scale: float = INTENSITY_SCALE) -> np.ndarray:
    """Cost matrix of shape (C, H, W) with values in (0, T]."""
    if not t > 0 or not T >= t or not eps > 0:
        raise ValueError(f"need t > 0, T >= t, eps > 0 (got t={t}, T={T}, eps={eps})")
    cover = np.asarray(cover, dtype=np.float64)
    out = np.empty_like(cover)
    for c, plane in enumerate(cover * scale):
        residual = np.abs(convolve2d(plane, HIGH_PASS))
        smoothed = convolve2d(residual, LOW_PASS_1)
        w = convolve2d(1.0 / (smoothed + eps), LOW_PASS_2)
        out[c] = np.where(w > t, T, w)
    return out
