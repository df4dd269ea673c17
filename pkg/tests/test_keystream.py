import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keyfnns.keystream import (StegoKey, Xoshiro256StarStar, derive_mask, encrypt, random_message,
                               splitmix64, wrong_key_set)

seeds = st.binary(min_size=32, max_size=32)


def test_splitmix64_reference_outputs():
    state, first = splitmix64(0)
    assert first == 0xE220A8397B1DCDAF
    assert splitmix64(state)[1] == 0x6E789E6AA1B965F4


def test_xoshiro256starstar_reference_outputs():
    gen = Xoshiro256StarStar((1, 2, 3, 4))
    assert gen.next_block(6) == [11520, 0, 1509978240, 1215971899390074240,
                                 1216172134540287360, 607988272756665600]


def test_zero_state_rejected():
    with pytest.raises(ValueError):
        Xoshiro256StarStar((0, 0, 0, 0))


def test_block_and_scalar_draws_agree():
    a = StegoKey.from_int(9).stream()
    b = StegoKey.from_int(9).stream()
    assert a.next_block(5) == [b.next_u64() for _ in range(5)]


def test_random_uses_top_53_bits():
    gen = StegoKey.from_int(1).stream()
    words = StegoKey.from_int(1).stream().next_block(4)
    assert gen.random(4).tolist() == [(w >> 11) / 2.0 ** 53 for w in words]


def test_key_constructors():
    k = StegoKey.from_hex("0x" + "ab" * 32)
    assert k.hex() == "ab" * 32
    assert StegoKey.from_passphrase("pw") == StegoKey.from_passphrase("pw")
    assert StegoKey.from_passphrase("pw") != StegoKey.from_passphrase("pW")
    with pytest.raises(ValueError):
        StegoKey.from_hex("abc")
    with pytest.raises(ValueError):
        StegoKey.from_hex("zz" * 32)
    with pytest.raises(ValueError):
        StegoKey(b"short")
    assert "..." in repr(k) and "ab" * 32 not in repr(k)


@given(seeds, seeds)
def test_key_equality_iff_seed_equality(a, b):
    assert (StegoKey(a) == StegoKey(b)) == (a == b)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 12), st.integers(1, 12))
def test_mask_range_and_determinism(seed, c, h, w):
    k = StegoKey(seed)
    m = derive_mask(k, (c, h, w))
    assert m.shape == (c, h, w)
    assert np.all(m >= -1) and np.all(m < 1)
    assert np.array_equal(m, derive_mask(StegoKey(seed), (c, h, w)))


def test_mask_statistics():
    m = derive_mask(StegoKey.from_int(77), (3, 64, 64))
    assert abs(m.mean()) < 0.02
    assert abs(m.var() - 1 / 3) < 0.01


def test_null_key_mask_is_zero_and_encrypt_adds_unclipped():
    x = np.full((3, 4, 4), 0.9)
    assert not derive_mask(StegoKey.null_key(), x.shape).any()
    k = StegoKey.from_int(5)
    enc = encrypt(x, k)
    assert np.array_equal(enc, x + derive_mask(k, x.shape))
    assert np.array_equal(encrypt(x, StegoKey.null_key()), x)


def test_encrypted_values_reach_beyond_unit_interval():
    x = np.full((3, 32, 32), 0.95)
    enc = encrypt(x, StegoKey.from_int(2))
    assert enc.max() > 1.5 and enc.min() < 0.0


def test_random_message_is_balanced_and_keyed():
    m = random_message(StegoKey.from_int(1), (1, 64, 64))
    assert set(np.unique(m)) <= {0, 1}
    assert abs(m.mean() - 0.5) < 0.03
    assert not np.array_equal(m, random_message(StegoKey.from_int(2), (1, 64, 64)))
    # independent of the encryption mask stream of the same key
    mask_bits = (derive_mask(StegoKey.from_int(1), (1, 64, 64)) >= 0).astype(np.uint8)
    assert abs(np.mean(mask_bits == m) - 0.5) < 0.03


@given(seeds, st.integers(1, 8))
def test_wrong_key_set_properties(seed, n):
    k = StegoKey(seed)
    ks = wrong_key_set(k, n)
    assert len(ks) == n
    assert k not in ks
    assert len(set(ks)) == n
    assert ks[:2] == wrong_key_set(k, n)[:2]


def test_wrong_key_set_rejects_empty():
    with pytest.raises(ValueError):
        wrong_key_set(StegoKey.from_int(1), 0)
