"""Minimal 8-bit PNG codec (zlib + struct).

Decodes non-interlaced 8-bit truecolor (RGB / RGBA) and grayscale files,
encodes RGB and grayscale with filter type 0 so output bytes are a pure
function of the pixel data.
"""
from __future__ import annotations

import struct
import zlib

import numpy as np

SIGNATURE = b"\x89PNG\r\n\x1a\n"

COLOR_GRAY = 0
COLOR_RGB = 2
COLOR_RGBA = 6
_CHANNELS = {COLOR_GRAY: 1, COLOR_RGB: 3, 4: 2, COLOR_RGBA: 4}


class PNGError(ValueError):
    pass


def _chunk(tag: bytes, data: bytes) -> bytes:
    crc = zlib.crc32(tag + data) & 0xFFFFFFFF
    return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", crc)


def encode(pixels: np.ndarray) -> bytes:
    """Encode an (H, W) grayscale or (H, W, 3) RGB uint8 array."""
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8:
        raise PNGError(f"expected uint8 pixels, got {pixels.dtype}")
    if pixels.ndim == 2:
        color, h, w = COLOR_GRAY, *pixels.shape
        rows = pixels.reshape(h, w)
    elif pixels.ndim == 3 and pixels.shape[2] == 3:
        color, h, w = COLOR_RGB, pixels.shape[0], pixels.shape[1]
        rows = pixels.reshape(h, w * 3)
    else:
        raise PNGError(f"unsupported pixel array shape {pixels.shape}")
    if h == 0 or w == 0:
        raise PNGError("empty image")
    raw = np.zeros((h, rows.shape[1] + 1), dtype=np.uint8)
    raw[:, 1:] = rows
    ihdr = struct.pack(">IIBBBBB", w, h, 8, color, 0, 0, 0)
    return (SIGNATURE + _chunk(b"IHDR", ihdr)
            + _chunk(b"IDAT", zlib.compress(raw.tobytes(), 9))
            + _chunk(b"IEND", b""))


def _paeth_row(line: np.ndarray, prior: np.ndarray, bpp: int) -> None:
    # sequential in x; vectorized over the bytes of one pixel
    a = np.zeros(bpp, dtype=np.int16)
    c = np.zeros(bpp, dtype=np.int16)
    for x in range(0, line.size, bpp):
        b = prior[x:x + bpp].astype(np.int16)
        p = a + b - c
        pa, pb, pc = np.abs(p - a), np.abs(p - b), np.abs(p - c)
        pred = np.where((pa <= pb) & (pa <= pc), a, np.where(pb <= pc, b, c))
        line[x:x + bpp] = (line[x:x + bpp].astype(np.int16) + pred) & 0xFF
        a = line[x:x + bpp].astype(np.int16)
        c = b


def _unfilter(data: bytes, h: int, stride: int, bpp: int) -> np.ndarray:
    if len(data) != h * (stride + 1):
        raise PNGError(f"image data has {len(data)} bytes, expected {h * (stride + 1)}")
    buf = np.frombuffer(data, dtype=np.uint8).reshape(h, stride + 1)
    out = np.zeros((h, stride), dtype=np.uint8)
    prior = np.zeros(stride, dtype=np.uint8)
    for y in range(h):
        ftype = int(buf[y, 0])
        line = buf[y, 1:].copy()
        if ftype == 0:
            pass
        elif ftype == 1:
            # Sub: running sum per byte lane, mod 256
            lanes = line.reshape(-1, bpp).astype(np.uint64)
            line = (np.cumsum(lanes, axis=0) & 0xFF).astype(np.uint8).reshape(-1)
        elif ftype == 2:
            line = line + prior
        elif ftype == 3:
            for x in range(stride):
                left = int(line[x - bpp]) if x >= bpp else 0
                line[x] = (int(line[x]) + ((left + int(prior[x])) >> 1)) & 0xFF
        elif ftype == 4:
            _paeth_row(line, prior, bpp)
        else:
            raise PNGError(f"invalid filter type {ftype} on row {y}")
        out[y] = line
        prior = line
    return out


def decode(blob: bytes) -> np.ndarray:
    """Decode PNG bytes to an (H, W, channels) uint8 array."""
    if not blob.startswith(SIGNATURE):
        raise PNGError("not a PNG file (bad signature)")
    pos = len(SIGNATURE)
    header = None
    idat = []
    while True:
        if pos + 8 > len(blob):
            raise PNGError("truncated PNG (missing IEND)")
        (length,) = struct.unpack(">I", blob[pos:pos + 4])
        tag = blob[pos + 4:pos + 8]
        data = blob[pos + 8:pos + 8 + length]
        if len(data) != length or pos + 12 + length > len(blob):
            raise PNGError(f"truncated {tag!r} chunk")
        (crc,) = struct.unpack(">I", blob[pos + 8 + length:pos + 12 + length])
        if zlib.crc32(tag + data) & 0xFFFFFFFF != crc:
            raise PNGError(f"CRC mismatch in {tag!r} chunk")
        pos += 12 + length
        if tag == b"IHDR":
            header = struct.unpack(">IIBBBBB", data)
        elif tag == b"IDAT":
            idat.append(data)
        elif tag == b"IEND":
            break
    if header is None:
        raise PNGError("missing IHDR chunk")
    w, h, depth, color, _comp, _filt, interlace = header
    if depth != 8:
        raise PNGError(f"unsupported bit depth {depth} (only 8-bit images are supported)")
    if color not in _CHANNELS:
        raise PNGError(f"unsupported color type {color} (palette images are not supported)")
    if interlace:
        raise PNGError("interlaced PNGs are not supported")
    try:
        raw = zlib.decompress(b"".join(idat))
    except zlib.error as exc:
        raise PNGError(f"corrupt image data: {exc}") from exc
    channels = _CHANNELS[color]
    rows = _unfilter(raw, h, w * channels, channels)
    return rows.reshape(h, w, channels)
