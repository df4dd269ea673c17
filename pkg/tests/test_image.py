import io
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from keyfnns import png
from keyfnns.image import (check_image, clip01, dequantize, load_png, load_png_bytes, quantize,
                           residual, save_png)

unit_floats = st.floats(0.0, 1.0, allow_nan=False)
byte_images = arrays(np.uint8, st.tuples(st.just(3), st.integers(1, 9), st.integers(1, 9)))


def pillow_decode(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB")).transpose(2, 0, 1)


def write_with_pillow(arr_hwc, path, mode):
    Image.fromarray(arr_hwc, mode=mode).save(path)


def test_uniform_gray_loads_as_128_over_255(tmp_path):
    p = tmp_path / "gray.png"
    write_with_pillow(np.full((4, 5, 3), 128, np.uint8), p, "RGB")
    img = load_png(p)
    assert img.shape == (3, 4, 5)
    assert np.all(img == 128 / 255)


def test_single_black_pixel(tmp_path):
    p = tmp_path / "black.png"
    write_with_pillow(np.zeros((1, 1, 3), np.uint8), p, "RGB")
    assert load_png(p).tolist() == [[[0.0]], [[0.0]], [[0.0]]]


def test_save_then_pillow_decodes_identical_bytes(tmp_path):
    levels = np.array([[0, 85], [170, 255]], dtype=np.uint8)
    img = np.stack([levels, levels.T, 255 - levels])
    p = tmp_path / "levels.png"
    save_png(img, p)
    assert np.array_equal(pillow_decode(p), img)


def test_all_zero_round_trip(tmp_path):
    p = tmp_path / "z.png"
    save_png(np.zeros((3, 6, 7), np.uint8), p)
    assert not load_png_bytes(p).any()


@settings(max_examples=40, deadline=None)
@given(byte_images)
def test_png_round_trip_is_exact(img):
    blob = png.encode(img.transpose(1, 2, 0).copy())
    assert np.array_equal(png.decode(blob).transpose(2, 0, 1), img)
    with Image.open(io.BytesIO(blob)) as im:
        assert np.array_equal(np.asarray(im).transpose(2, 0, 1), img)


def test_load_save_load_identity(tmp_path, rng):
    src = tmp_path / "src.png"
    write_with_pillow(rng.integers(0, 256, (9, 11, 3), dtype=np.uint8), src, "RGB")
    a = load_png(src)
    dst = tmp_path / "dst.png"
    save_png(quantize(a), dst)
    assert np.array_equal(load_png(dst), a)


@pytest.mark.parametrize("optimize", [False, True])
def test_decoder_handles_all_filter_types(tmp_path, rng, optimize):
    # Pillow's optimizer picks adaptive filters (sub, up, average, paeth) per row
    arr = rng.integers(0, 256, (17, 23, 3), dtype=np.uint8)
    arr[:, :, 1] = np.cumsum(arr[:, :, 1], axis=1) % 256
    p = tmp_path / "f.png"
    Image.fromarray(arr).save(p, optimize=optimize)
    assert np.array_equal(load_png_bytes(p), arr.transpose(2, 0, 1))


def test_rgba_alpha_is_dropped(tmp_path, rng):
    arr = rng.integers(0, 256, (5, 4, 4), dtype=np.uint8)
    p = tmp_path / "a.png"
    write_with_pillow(arr, p, "RGBA")
    assert np.array_equal(load_png_bytes(p), arr[:, :, :3].transpose(2, 0, 1))


def test_grayscale_is_rejected(tmp_path):
    p = tmp_path / "g.png"
    Image.fromarray(np.zeros((3, 3), np.uint8), mode="L").save(p)
    with pytest.raises(png.PNGError, match="grayscale"):
        load_png(p)


def test_sixteen_bit_is_rejected(tmp_path):
    p = tmp_path / "16.png"
    Image.fromarray(np.zeros((3, 3), np.uint16)).save(p)
    with pytest.raises(png.PNGError, match="bit depth"):
        load_png(p)


def test_palette_is_rejected(tmp_path):
    p = tmp_path / "p.png"
    Image.fromarray(np.zeros((3, 3, 3), np.uint8)).convert("P").save(p)
    with pytest.raises(png.PNGError, match="palette"):
        load_png(p)


def test_missing_file_and_garbage(tmp_path):
    with pytest.raises(png.PNGError, match="cannot read"):
        load_png(tmp_path / "nope.png")
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not a png at all")
    with pytest.raises(png.PNGError, match="signature"):
        load_png(bad)


def test_truncated_and_corrupted_files(tmp_path):
    blob = png.encode(np.zeros((4, 4, 3), np.uint8))
    with pytest.raises(png.PNGError):
        png.decode(blob[:-20])
    flipped = bytearray(blob)
    flipped[40] ^= 0xFF
    with pytest.raises(png.PNGError, match="CRC|corrupt"):
        png.decode(bytes(flipped))


def test_save_rejects_float_images(tmp_path):
    with pytest.raises(TypeError):
        save_png(np.zeros((3, 2, 2)), tmp_path / "x.png")


def test_encoder_is_deterministic():
    img = np.arange(48, dtype=np.uint8).reshape(4, 4, 3)
    assert png.encode(img) == png.encode(img.copy())
    # filter byte 0 on every row
    raw = zlib.decompress(png.encode(img)[33 + 8:-12])
    assert raw[::13] == bytes(4)


def test_clip_examples():
    out = clip01(np.array([-0.2, 1.7, 0.42]))
    assert out.tolist() == [0.0, 1.0, 0.42]


def test_quantize_examples():
    assert quantize(np.array([0.0, 1.0, 0.5])).tolist() == [0, 255, 128]
    # exact half-steps round away from zero
    assert quantize(np.array([0.5 / 255, 2.5 / 255])).tolist() == [1, 3]


@given(arrays(np.float64, st.integers(1, 50), elements=unit_floats))
def test_quantize_error_bound(x):
    assert np.all(np.abs(x - dequantize(quantize(x))) <= 1 / 510 + 1e-15)


@given(arrays(np.float64, st.integers(1, 50), elements=unit_floats))
def test_quantize_is_idempotent(x):
    q = quantize(x)
    assert np.array_equal(quantize(dequantize(q)), q)


@given(arrays(np.float64, st.integers(1, 50), elements=st.floats(-3, 3)),
       arrays(np.float64, st.integers(1, 50), elements=st.floats(-3, 3)))
def test_clip_idempotent_and_monotone(a, b):
    assert np.array_equal(clip01(clip01(a)), clip01(a))
    n = min(a.size, b.size)
    lo, hi = np.minimum(a[:n], b[:n]), np.maximum(a[:n], b[:n])
    assert np.all(clip01(lo) <= clip01(hi))


def test_residual_examples():
    a = np.full((3, 2, 2), 0.5)
    assert not residual(a, a).any()
    assert np.allclose(residual(a, a + 0.05, 10), 0.5)
    assert np.all(residual(a, a + 0.2, 10) == 1.0)
    with pytest.raises(ValueError):
        residual(a, a[:1])


def test_check_image_shape():
    with pytest.raises(ValueError):
        check_image(np.zeros((2, 4, 4)))
    with pytest.raises(ValueError):
        check_image(np.zeros((4, 4)))


def _filtered_png(arr_hwc, filter_type):
    """Independent encoder applying one PNG filter type to every row."""
    import struct
    h, w, c = arr_hwc.shape
    rows = arr_hwc.reshape(h, w * c).astype(np.int32)
    out = bytearray()
    prev = np.zeros(w * c, np.int32)
    for r in rows:
        left = np.concatenate([np.zeros(c, np.int32), r[:-c]])
        upleft = np.concatenate([np.zeros(c, np.int32), prev[:-c]])
        if filter_type == 0:
            f = r
        elif filter_type == 1:
            f = r - left
        elif filter_type == 2:
            f = r - prev
        elif filter_type == 3:
            f = r - (left + prev) // 2
        else:
            pred = []
            for a, b, cc in zip(left, prev, upleft):
                p = a + b - cc
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - cc)
                pred.append(a if pa <= pb and pa <= pc else b if pb <= pc else cc)
            f = r - np.array(pred)
        out.append(filter_type)
        out.extend((f % 256).astype(np.uint8).tobytes())
        prev = r

    def chunk(tag, data):
        return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data))

    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return png.SIGNATURE + chunk(b"IHDR", ihdr) + chunk(b"IDAT", zlib.compress(bytes(out))) + chunk(b"IEND", b"")


@pytest.mark.parametrize("filter_type", [0, 1, 2, 3, 4])
def test_each_filter_type_matches_pillow(rng, filter_type):
    arr = rng.integers(0, 256, (6, 7, 3), dtype=np.uint8)
    blob = _filtered_png(arr, filter_type)
    with Image.open(io.BytesIO(blob)) as im:
        assert np.array_equal(np.asarray(im), arr)
    assert np.array_equal(png.decode(blob), arr)
