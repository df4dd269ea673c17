import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from skimage.metrics import structural_similarity

from keyfnns.metrics import ber, gaussian_kernel_1d, psnr, quality, ssim

u8 = st.integers(0, 255)


def sk_ssim(a, b):
    return np.mean([structural_similarity(x.astype(float), y.astype(float), gaussian_weights=True,
                                          sigma=1.5, use_sample_covariance=False, data_range=255)
                    for x, y in zip(a, b)])


def test_psnr_formula(rng):
    a = rng.integers(0, 256, (3, 16, 16))
    b = np.clip(a + rng.integers(-5, 6, a.shape), 0, 255)
    mse = np.mean((a - b) ** 2.0)
    assert abs(psnr(a, b) - 10 * np.log10(255 ** 2 / mse)) < 1e-9


def test_psnr_single_level():
    a = np.zeros((3, 4, 4), np.uint8)
    b = a.copy()
    b[0, 0, 0] = 1
    assert psnr(a, b) == pytest.approx(10 * np.log10(255 ** 2 * 48))


def test_psnr_identical_is_inf(rng):
    a = rng.integers(0, 256, (3, 8, 8))
    assert psnr(a, a) == float("inf")


def test_psnr_decreases_with_noise(rng):
    a = rng.integers(50, 200, (3, 16, 16))
    noise = rng.choice([-1, 1], a.shape)
    vals = [psnr(a, a + k * noise) for k in (1, 2, 4, 8, 16)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


@pytest.mark.parametrize("seed", range(4))
def test_ssim_matches_skimage(seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 256, (3, 24, 31))
    b = np.clip(a + rng.integers(-20, 21, a.shape), 0, 255)
    assert abs(ssim(a, b) - sk_ssim(a, b)) < 1e-6


def test_ssim_self_is_one(rng):
    a = rng.integers(0, 256, (3, 16, 16))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)


def test_ssim_grayscale_and_small_images(rng):
    a = rng.integers(0, 256, (16, 16))
    assert ssim(a, a) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ssim(np.zeros((3, 10, 16)), np.zeros((3, 10, 16)))


def test_gaussian_kernel():
    k = gaussian_kernel_1d()
    assert k.size == 11 and k.sum() == pytest.approx(1.0) and np.argmax(k) == 5
    assert np.allclose(k, k[::-1])


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, (3, 12, 12), elements=u8), arrays(np.uint8, (3, 12, 12), elements=u8))
def test_symmetry(a, b):
    assert psnr(a, b) == psnr(b, a)
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
    assert ssim(a, b) <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, (1, 5, 5), elements=st.integers(0, 1)),
       arrays(np.uint8, (1, 5, 5), elements=st.integers(0, 1)))
def test_ber_properties(m, n):
    assert ber(m, 1 - m) == 1.0
    assert ber(m, m) == 0.0
    assert ber(m, n) == ber(n, m)
    assert ber(m, n) + ber(m, 1 - n) == pytest.approx(1.0)


def test_ber_errors():
    with pytest.raises(ValueError):
        ber(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        ber(np.zeros(0), np.zeros(0))


def test_quality_bundle(rng):
    a = rng.integers(0, 256, (3, 16, 16))
    m = rng.integers(0, 2, (1, 16, 16))
    q = quality(m, m, a, a)
    assert q.ber == 0 and q.psnr == float("inf") and q.ssim == pytest.approx(1.0)
