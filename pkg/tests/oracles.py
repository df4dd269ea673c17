"""Slow, obviously-correct reference implementations used as test oracles."""
import numpy as np


def conv_same_zero(x, weight, bias):
    cin, h, w = x.shape
    cout, _, kh, kw = weight.shape
    out = np.zeros((cout, h, w))
    for o in range(cout):
        for i in range(h):
            for j in range(w):
                acc = bias[o]
                for c in range(cin):
                    for a in range(kh):
                        for b in range(kw):
                            y, z = i + a - kh // 2, j + b - kw // 2
                            if 0 <= y < h and 0 <= z < w:
                                acc += weight[o, c, a, b] * x[c, y, z]
                out[o, i, j] = acc
    return out


def decoder_forward(layers, x, slope):
    for k, (w, b) in enumerate(layers):
        x = conv_same_zero(x, w, b)
        if k < len(layers) - 1:
            x = np.where(x > 0, x, slope * x)
    return x


def mirror_index(i, n):
    # symmetric padding: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
    while i < 0 or i >= n:
        i = -i - 1 if i < 0 else 2 * n - 1 - i
    return i


def conv_same_mirror(plane, kernel):
    h, w = plane.shape
    kh, kw = kernel.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for a in range(kh):
                for b in range(kw):
                    acc += kernel[a, b] * plane[mirror_index(i + a - kh // 2, h), mirror_index(j + b - kw // 2, w)]
            out[i, j] = acc
    return out


def hill_pipeline(cover, t=0.5, T=3.0, eps=1e-10):
    hp = np.array([[-1, 2, -1], [2, -4, 2], [-1, 2, -1]], dtype=float)
    out = np.zeros_like(cover, dtype=float)
    for c in range(cover.shape[0]):
        plane = cover[c] * 255.0
        r = np.abs(conv_same_mirror(plane, hp))
        r = conv_same_mirror(r, np.full((3, 3), 1 / 9))
        w = conv_same_mirror(1.0 / (r + eps), np.full((15, 15), 1 / 225))
        for i in range(w.shape[0]):
            for j in range(w.shape[1]):
                out[c, i, j] = T if w[i, j] > t else w[i, j]
    return out


def central_differences(f, x, h=1e-3):
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def max_relative_error(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12))


def conv_transpose_same_zero(g, weight):
    """Adjoint of conv_same_zero with respect to its input."""
    cout, h, w = g.shape
    _, cin, kh, kw = weight.shape
    dx = np.zeros((cin, h, w))
    for o in range(cout):
        for i in range(h):
            for j in range(w):
                for c in range(cin):
                    for a in range(kh):
                        for b in range(kw):
                            y, z = i + a - kh // 2, j + b - kw // 2
                            if 0 <= y < h and 0 <= z < w:
                                dx[c, y, z] += weight[o, c, a, b] * g[o, i, j]
    return dx
