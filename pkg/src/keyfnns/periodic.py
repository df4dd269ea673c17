"""A hand-built decoder whose logit is a fine sawtooth of the first channel.

It uses the reference layout (four 3x3 convolutions, LeakyReLU 0.2) but
only centre taps and nonzero biases. Each hidden layer multiplies the
number of teeth, so a shift of a few intensity levels flips the decoded
bit while a random additive mask scrambles it completely. Used by the
end-to-end demos because a randomly seeded decoder needs perturbations of
the order of the mask itself.
"""
import numpy as np

from .fnn import ConvLayer, FixedDecoder

SLOPE = 0.2
LO, HI = -1.0, 2.0          # range of x + mask


def _tent_layer(n_teeth, lo, hi):
    """Pre-activations [v, -v, v - o_1, ..., v - o_k] from a scalar v."""
    offsets = lo + (hi - lo) * np.arange(1, 2 * n_teeth) / (2 * n_teeth)
    w = np.concatenate([[1.0, -1.0], np.ones(offsets.size)])
    b = np.concatenate([[0.0, 0.0], -offsets])
    return w, b, offsets


def _triangle_coeffs(offsets, lo, hi, height):
    """Post-activation readout of a triangle wave in v with the given kinks.

    relu(z) = (lrelu(z) - SLOPE*z) / (1 - SLOPE) and
    v = (lrelu(v) - lrelu(-v)) / (1 + SLOPE), so the wave is linear in the
    post-activations h = [lrelu(v), lrelu(-v), lrelu(v - o_j)].
    """
    step = (hi - lo) / (offsets.size + 1)
    s = height / step
    # wave(v) = s*(v - lo) - 2 s sum_j (-1)^j relu(v - o_j), starting upward at lo
    a = np.array([-2.0 * s * (-1) ** j for j in range(offsets.size)])
    lin = s - SLOPE / (1 - SLOPE) * a.sum()          # coefficient on v
    const = -s * lo + (SLOPE / (1 - SLOPE)) * np.dot(a, offsets)
    cv = lin / (1 + SLOPE)
    coeffs = np.concatenate([[cv, -cv], a / (1 - SLOPE)])
    return coeffs, const


def build_periodic(teeth=(10, 6), gain=8.0, width=32) -> FixedDecoder:
    """Decoder with ``2*teeth[0]*teeth[1]`` sign changes over [-1, 2], D=1."""
    t1, t2 = teeth
    if 2 + 2 * t1 - 1 > width or 2 + 2 * t2 - 1 > width:
        raise ValueError("too many teeth for the hidden width")

    def conv(cin, cout, centre, bias):
        w = np.zeros((cout, cin, 3, 3))
        w[:, :, 1, 1] = centre
        return ConvLayer(w, np.asarray(bias, dtype=np.float64))

    # layer 1: tents on u = x_0 + m_0
    w1, b1, off1 = _tent_layer(t1, LO, HI)
    c1 = np.zeros((width, 3))
    c1[: w1.size, 0] = w1
    bias1 = np.zeros(width)
    bias1[: b1.size] = b1
    # layer 2: v = triangle(u) in [0, 1], then tents on v
    r1, k1 = _triangle_coeffs(off1, LO, HI, 1.0)
    w2, b2, off2 = _tent_layer(t2, 0.0, 1.0)
    c2 = np.zeros((width, width))
    c2[: w2.size, : r1.size] = np.outer(w2, r1)
    bias2 = np.zeros(width)
    bias2[: w2.size] = w2 * k1 + b2
    # layer 3: pass w = triangle(v) in [0, 1] through as +w, -w
    r2, k2 = _triangle_coeffs(off2, 0.0, 1.0, 1.0)
    c3 = np.zeros((width, width))
    c3[0, : r2.size] = r2
    c3[1, : r2.size] = -r2
    bias3 = np.zeros(width)
    bias3[:2] = [k2, -k2]
    # layer 4: logit = gain * (w - 1/2)
    c4 = np.zeros((1, width))
    c4[0, :2] = np.array([1.0, -1.0]) * gain / (1 + SLOPE)
    return FixedDecoder([conv(3, width, c1, bias1), conv(width, width, c2, bias2),
                         conv(width, width, c3, bias3), conv(width, 1, c4, [-gain / 2])])
