import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import mannwhitneyu

from keyfnns import steganalysis as sa
from keyfnns.synthetic import corpus, lsb_randomize, natural_image

scores = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=30)


def test_equalized_pairs_give_p_one():
    plane = np.repeat(np.arange(256, dtype=np.uint8), 8).reshape(32, 64)
    assert sa.chi_square_attack(plane) == pytest.approx(1.0)


def test_clean_covers_mostly_below_threshold():
    fused = [sa.score(img).fused for img in corpus(100, 64)]
    assert np.mean(np.array(fused) < sa.DEFAULT_THRESHOLD) >= 0.8


def test_full_lsb_replacement_scores_higher():
    for seed in range(5):
        cover = natural_image(seed, 128)
        stego = lsb_randomize(cover, seed)
        c, s = sa.score(cover), sa.score(stego)
        assert s.chi_square > c.chi_square
        assert s.fused > c.fused
        assert s.rs > c.rs and s.sample_pairs > c.sample_pairs


def test_estimators_track_rate():
    cover = natural_image(3, 128)
    for est in (sa.rs_analysis, sa.sample_pairs):
        vals = [est(lsb_randomize(cover, 1, r)) for r in (0.0, 0.5, 1.0)]
        assert vals[0] < vals[1] < vals[2], est.__name__


def test_constant_image_scores_zero():
    img = np.full((3, 32, 32), 77, np.uint8)
    s = sa.score(img)
    assert s.chi_square == 0.0 and s.rs == 0.0 and s.sample_pairs == 0.0


def test_deterministic():
    img = natural_image(9, 64)
    assert sa.score(img) == sa.score(img.copy())


def test_detectors_reject_float_images():
    with pytest.raises(TypeError):
        sa.score(np.zeros((3, 32, 32)))


def test_chi_square_needs_pixels():
    with pytest.raises(ValueError):
        sa.chi_square_attack(np.zeros((3, 8, 8), np.uint8))


def test_fused_is_mean():
    s = sa.DetectorScore(0.3, 0.6, 0.9)
    assert s.fused == pytest.approx(0.6)


def test_hand_roc():
    r = sa.roc([0.1, 0.4], [0.35, 0.8])
    assert r.auc == pytest.approx(0.75)
    assert r.fpr[0] == 0 and r.tpr[0] == 0 and r.fpr[-1] == 1 and r.tpr[-1] == 1
    assert np.isinf(r.thresholds[0])


def test_roc_extremes():
    assert sa.roc([0, 1], [2, 3]).auc == 1.0
    assert sa.roc([2, 3], [0, 1]).auc == 0.0
    assert sa.roc([0.5], [0.5]).auc == 0.5


def test_roc_empty():
    with pytest.raises(ValueError):
        sa.roc([], [1.0])


@settings(max_examples=60, deadline=None)
@given(scores, scores)
def test_auc_matches_mann_whitney(neg, pos):
    u = mannwhitneyu(pos, neg, alternative="two-sided").statistic
    assert sa.roc(neg, pos).auc == pytest.approx(u / (len(neg) * len(pos)), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=1, max_size=30),
       st.lists(st.integers(-20, 20), min_size=1, max_size=30))
def test_auc_invariant_to_monotone_rescaling(neg, pos):
    a = sa.roc(neg, pos)
    b = sa.roc(2 * np.exp(np.array(neg)) + 1, 2 * np.exp(np.array(pos)) + 1)
    assert a.auc == pytest.approx(b.auc, abs=1e-12)
    assert np.all(np.diff(a.fpr) >= 0) and np.all(np.diff(a.tpr) >= 0)
