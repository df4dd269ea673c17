"""Planar image tensors, 8-bit quantization and PNG I/O.

Images are float64 arrays of shape (C, H, W) with intensities in [0, 1];
quantized images are uint8 arrays of the same shape.
"""
from __future__ import annotations

import os

import numpy as np

from . import png

LEVELS = 255


def load_png(path: str | os.PathLike) -> np.ndarray:
    """Read an 8-bit RGB/RGBA PNG as a (3, H, W) float tensor in [0, 1]."""
    return dequantize(load_png_bytes(path))


def load_png_bytes(path: str | os.PathLike) -> np.ndarray:
    """Read an 8-bit RGB/RGBA PNG as a (3, H, W) uint8 array (alpha dropped)."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise png.PNGError(f"cannot read {os.fspath(path)!r}: {exc.strerror}") from exc
    try:
        pixels = png.decode(blob)
    except png.PNGError as exc:
        raise png.PNGError(f"{os.fspath(path)}: {exc}") from exc
    if pixels.shape[2] < 3:
        raise png.PNGError(f"{os.fspath(path)}: grayscale PNGs are not supported, RGB required")
    return np.ascontiguousarray(pixels[:, :, :3].transpose(2, 0, 1))


def save_png(img: np.ndarray, path: str | os.PathLike) -> None:
    """Write a (3, H, W) uint8 image, or an (H, W) uint8 plane, as PNG."""
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise TypeError(f"save_png expects a quantized uint8 image, got {img.dtype}")
    pixels = img if img.ndim == 2 else img.transpose(1, 2, 0)
    blob = png.encode(np.ascontiguousarray(pixels))
    with open(path, "wb") as fh:
        fh.write(blob)


def clip01(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0.0, 1.0)


def quantize(img: np.ndarray) -> np.ndarray:
    """Map [0, 1] intensities to 255 levels, rounding half away from zero."""
    scaled = np.asarray(img, dtype=np.float64) * LEVELS
    q = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return np.clip(q, 0, LEVELS).astype(np.uint8)


def dequantize(q: np.ndarray) -> np.ndarray:
    return np.asarray(q, dtype=np.float64) / LEVELS


def residual(a: np.ndarray, b: np.ndarray, gain: float = 10.0) -> np.ndarray:
    """Magnified absolute difference, clipped for display."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return clip01(gain * np.abs(a - b))


def check_image(img: np.ndarray, name: str = "image") -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] != 3 or min(img.shape) < 1:
        raise ValueError(f"{name} must have shape (3, H, W), got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError(f"{name} contains non-finite values")
    return img
