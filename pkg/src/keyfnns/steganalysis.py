"""Classical LSB detectors, score fusion and ROC curves.

Each detector works on one 8-bit channel at a time and the per-channel
scores are averaged. The fused score is the mean of the three detectors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

DEFAULT_THRESHOLD = 0.2
RS_MASK = np.array([0, 1, 1, 0])
_MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class DetectorScore:
    chi_square: float
    rs: float
    sample_pairs: float

    @property
    def fused(self) -> float:
        return (self.chi_square + self.rs + self.sample_pairs) / 3.0


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


def _channels(img: np.ndarray) -> list[np.ndarray]:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise TypeError(f"detectors expect uint8 images, got {img.dtype}")
    if img.ndim == 2:
        return [img]
    return list(img)


def _chi_square_plane(plane: np.ndarray) -> float:
    hist = np.bincount(plane.ravel(), minlength=256).astype(np.float64)
    even, odd = hist[0::2], hist[1::2]
    expected = (even + odd) / 2.0
    keep = expected >= _MIN_EXPECTED
    if np.count_nonzero(keep) < 2:
        return 0.0
    stat = np.sum((even[keep] - expected[keep]) ** 2 / expected[keep])
    return float(chi2.sf(stat, np.count_nonzero(keep) - 1))


def chi_square_attack(img: np.ndarray) -> float:
    """Pairs-of-values chi-square p-value: near 1 when value pairs are equalized."""
    planes = _channels(img)
    if planes[0].size < 256:
        raise ValueError("chi-square attack needs at least 256 pixels")
    return float(np.mean([_chi_square_plane(p) for p in planes]))


def _flip(x: np.ndarray) -> np.ndarray:
    return x ^ 1


def _flip_neg(x: np.ndarray) -> np.ndarray:
    # shifted flipping: -1<->0, 1<->2, 3<->4, ...
    return ((x + 1) ^ 1) - 1


def _rs_counts(plane: np.ndarray) -> tuple[float, float, float, float]:
    h, w = plane.shape
    g = plane[:, : w - w % 4].astype(np.int64).reshape(-1, 4)
    if g.shape[0] == 0:
        return 0.0, 0.0, 0.0, 0.0
    disc = lambda b: np.abs(np.diff(b, axis=1)).sum(axis=1)  # noqa: E731
    f0 = disc(g)
    m = RS_MASK.astype(bool)
    pos = g.copy()
    pos[:, m] = _flip(g[:, m])
    neg = g.copy()
    neg[:, m] = _flip_neg(g[:, m])
    fp, fn = disc(pos), disc(neg)
    n = g.shape[0]
    return (np.count_nonzero(fp > f0) / n, np.count_nonzero(fp < f0) / n,
            np.count_nonzero(fn > f0) / n, np.count_nonzero(fn < f0) / n)


def _rs_plane(plane: np.ndarray) -> float:
    r, s, rn, sn = _rs_counts(plane)
    r1, s1, rn1, sn1 = _rs_counts(plane ^ 1)
    d0, d1 = r - s, r1 - s1
    dn0, dn1 = rn - sn, rn1 - sn1
    a = 2.0 * (d1 + d0)
    b = dn0 - dn1 - d1 - 3.0 * d0
    c = d0 - dn0
    if abs(a) < 1e-12:
        if abs(b) < 1e-12:
            return 0.0
        x = -c / b
    else:
        disc = b * b - 4.0 * a * c
        if disc < 0:
            return 0.0
        roots = [(-b + np.sqrt(disc)) / (2 * a), (-b - np.sqrt(disc)) / (2 * a)]
        x = min(roots, key=abs)
    if x == 0.5:
        return 1.0
    p = x / (x - 0.5)
    return float(np.clip(p, 0.0, 1.0)) if np.isfinite(p) else 0.0


def rs_analysis(img: np.ndarray) -> float:
    """RS estimate of the LSB embedding rate, clamped to [0, 1]."""
    return float(np.mean([_rs_plane(p) for p in _channels(img)]))


def _spa_plane(plane: np.ndarray) -> float:
    u = plane[:, :-1].astype(np.int64).ravel()
    v = plane[:, 1:].astype(np.int64).ravel()
    total = u.size
    if total == 0:
        return 0.0
    v_even = (v & 1) == 0
    x = np.count_nonzero((v_even & (u < v)) | (~v_even & (u > v)))
    y = np.count_nonzero((v_even & (u > v)) | (~v_even & (u < v)))
    k = np.count_nonzero((u >> 1) == (v >> 1))  # same LSB pair, including u == v
    if k == 0:
        return 0.0
    a = k / 2.0
    b = 2.0 * x - total
    c = y - x
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return 0.0
    roots = ((-b + np.sqrt(disc)) / (2 * a), (-b - np.sqrt(disc)) / (2 * a))
    return float(np.clip(min(roots), 0.0, 1.0))


def sample_pairs(img: np.ndarray) -> float:
    """Sample-pairs estimate of the LSB embedding rate, clamped to [0, 1]."""
    return float(np.mean([_spa_plane(p) for p in _channels(img)]))


def score(img: np.ndarray) -> DetectorScore:
    return DetectorScore(chi_square_attack(img), rs_analysis(img), sample_pairs(img))


def roc(cover_scores, stego_scores) -> RocCurve:
    """ROC sweeping the threshold over every distinct score (stego = positive)."""
    neg = np.asarray(cover_scores, dtype=np.float64).ravel()
    pos = np.asarray(stego_scores, dtype=np.float64).ravel()
    if neg.size == 0 or pos.size == 0:
        raise ValueError("roc needs non-empty cover and stego score lists")
    thresholds = np.unique(np.concatenate([neg, pos]))[::-1]
    # predict stego when score >= threshold
    tpr = np.array([np.count_nonzero(pos >= t) for t in thresholds]) / pos.size
    fpr = np.array([np.count_nonzero(neg >= t) for t in thresholds]) / neg.size
    fpr = np.concatenate([[0.0], fpr])
    tpr = np.concatenate([[0.0], tpr])
    thresholds = np.concatenate([[np.inf], thresholds])
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, auc)
