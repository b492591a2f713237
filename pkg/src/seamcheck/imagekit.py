"""Pixel buffers, image file I/O, grayscale conversion, smoothing, and HSV conversion.

Images are plain numpy arrays throughout the package:

* RGB image:    shape ``(height, width, 3)``, dtype ``uint8``, row-major, top-left origin
* gray image:   shape ``(height, width)``, dtype ``uint8``
* binary image: shape ``(height, width)``, dtype ``bool`` (True = foreground)

Supported file formats are binary PPM (P6, maxval 255) for reading and
writing, and 8-bit truecolor PNG (RGB or RGBA, alpha discarded) for reading.
PPM is the canonical format: it round-trips bit-exactly.
"""

from __future__ import annotations

import math
import struct
import zlib

import numpy as np

from .errors import KernelTooLarge, MalformedFile, UnsupportedFormat

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

# Rec. 601 luma weights.
_LUMA_R, _LUMA_G, _LUMA_B = 0.299, 0.587, 0.114


def validate_rgb(img: np.ndarray) -> np.ndarray:
    """Check an array against the RGB image conventions and return it."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError(f"expected (h, w, 3) uint8 RGB image, got shape {img.shape} dtype {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return img


def validate_gray(img: np.ndarray) -> np.ndarray:
    """Check an array against the grayscale image conventions and return it."""
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError(f"expected (h, w) uint8 gray image, got shape {img.shape} dtype {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return img


# ---------------------------------------------------------------------------
# PPM / PGM
# ---------------------------------------------------------------------------

def _ppm_header_tokens(data: bytes, start: int, count: int) -> tuple[list[int], int]:
    """Read `count` whitespace-separated integer tokens, honoring '#' comments.

    Returns the tokens and the offset one byte past the final separator,
    which is where the binary payload begins.
    """
    tokens: list[int] = []
    pos = start
    n = len(data)
    while len(tokens) < count:
        # skip whitespace and comments
        while pos < n:
            c = data[pos]
            if c in b" \t\r\n\x0b\x0c":
                pos += 1
            elif c == ord("#"):
                while pos < n and data[pos] not in b"\r\n":
                    pos += 1
            else:
                break
        tok_start = pos
        while pos < n and data[pos] not in b" \t\r\n\x0b\x0c":
            pos += 1
        if pos == tok_start:
            raise MalformedFile("truncated PPM header")
        try:
            tokens.append(int(data[tok_start:pos]))
        except ValueError as exc:
            raise MalformedFile(f"bad PPM header token {data[tok_start:pos]!r}") from exc
    if pos >= n:
        raise MalformedFile("PPM payload missing")
    # exactly one whitespace byte separates the header from the payload
    if data[pos] not in b" \t\r\n\x0b\x0c":
        raise MalformedFile("PPM header not terminated by whitespace")
    return tokens, pos + 1


def _decode_ppm(data: bytes) -> np.ndarray:
    (width, height, maxval), payload_at = _ppm_header_tokens(data, 2, 3)
    if width < 1 or height < 1:
        raise MalformedFile(f"bad PPM dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormat(f"only maxval 255 PPM supported, got {maxval}")
    expected = width * height * 3
    payload = data[payload_at:payload_at + expected]
    if len(payload) < expected:
        raise MalformedFile(f"PPM payload truncated: expected {expected} bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()


def encode_image(img: np.ndarray) -> bytes:
    """Encode an RGB image as binary PPM (P6, maxval 255).

    ``decode_image(encode_image(img))`` reproduces ``img`` bit-exactly.
    """
    img = validate_rgb(img)
    h, w = img.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + img.tobytes()


def encode_pgm(gray: np.ndarray) -> bytes:
    """Encode a grayscale image as binary PGM (P5, maxval 255)."""
    gray = validate_gray(gray)
    h, w = gray.shape
    return b"P5\n%d %d\n255\n" % (w, h) + gray.tobytes()


# ---------------------------------------------------------------------------
# PNG
# ---------------------------------------------------------------------------

def _png_chunks(data: bytes):
    pos = len(_PNG_SIGNATURE)
    n = len(data)
    while pos + 8 <= n:
        length, ctype = struct.unpack(">I4s", data[pos:pos + 8])
        body = data[pos + 8:pos + 8 + length]
        if len(body) < length:
            raise MalformedFile("PNG chunk truncated")
        yield ctype, body
        pos += 12 + length  # length + type + body + crc
        if ctype == b"IEND":
            return
    raise MalformedFile("PNG missing IEND chunk")


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _unfilter_rows(raw: bytes, width: int, height: int, channels: int) -> np.ndarray:
    stride = width * channels
    if len(raw) != (stride + 1) * height:
        raise MalformedFile("PNG pixel data has wrong length")
    out = np.zeros((height, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.uint8)
    for y in range(height):
        ftype = raw[y * (stride + 1)]
        row = np.frombuffer(raw, dtype=np.uint8, count=stride, offset=y * (stride + 1) + 1).copy()
        if ftype == 0:
            line = row
        elif ftype == 1:  # Sub: per-channel prefix sum
            line = row
            for c in range(channels):
                line[c::channels] = np.cumsum(line[c::channels], dtype=np.uint64) & 0xFF
        elif ftype == 2:  # Up
            line = ((row.astype(np.uint16) + prev) & 0xFF).astype(np.uint8)
        elif ftype == 3:  # Average
            line = row
            for x in range(stride):
                a = int(line[x - channels]) if x >= channels else 0
                line[x] = (int(line[x]) + (a + int(prev[x])) // 2) & 0xFF
        elif ftype == 4:  # Paeth
            line = row
            for x in range(stride):
                a = int(line[x - channels]) if x >= channels else 0
                c = int(prev[x - channels]) if x >= channels else 0
                line[x] = (int(line[x]) + _paeth(a, int(prev[x]), c)) & 0xFF
        else:
            raise MalformedFile(f"unknown PNG filter type {ftype}")
        out[y] = line
        prev = out[y]
    return out.reshape(height, width, channels)


def _decode_png(data: bytes) -> np.ndarray:
    ihdr = None
    idat = bytearray()
    for ctype, body in _png_chunks(data):
        if ctype == b"IHDR":
            if len(body) != 13:
                raise MalformedFile("bad IHDR length")
            ihdr = struct.unpack(">IIBBBBB", body)
        elif ctype == b"IDAT":
            idat.extend(body)
        elif ctype == b"IEND":
            break
    if ihdr is None:
        raise MalformedFile("PNG missing IHDR chunk")
    width, height, depth, color, compression, filt, interlace = ihdr
    if width < 1 or height < 1:
        raise MalformedFile(f"bad PNG dimensions {width}x{height}")
    if depth == 16:
        raise UnsupportedFormat("16-bit PNG not supported")
    if color == 3:
        raise UnsupportedFormat("paletted PNG not supported")
    if depth != 8 or color not in (2, 6):
        raise UnsupportedFormat(f"only 8-bit RGB/RGBA PNG supported (depth {depth}, color type {color})")
    if compression != 0 or filt != 0:
        raise MalformedFile("bad PNG compression/filter method")
    if interlace != 0:
        raise UnsupportedFormat("interlaced PNG not supported")
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise MalformedFile(f"PNG pixel data corrupt: {exc}") from exc
    channels = 3 if color == 2 else 4
    pixels = _unfilter_rows(raw, width, height, channels)
    return pixels[:, :, :3].copy()  # alpha discarded


def encode_png(img: np.ndarray) -> bytes:
    """Encode an RGB image as 8-bit truecolor PNG (filter 0 rows)."""
    img = validate_rgb(img)
    h, w = img.shape[:2]

    def chunk(ctype: bytes, body: bytes) -> bytes:
        return struct.pack(">I", len(body)) + ctype + body + struct.pack(">I", zlib.crc32(ctype + body))

    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    raw = bytearray()
    for y in range(h):
        raw.append(0)
        raw.extend(img[y].tobytes())
    return (_PNG_SIGNATURE
            + chunk(b"IHDR", ihdr)
            + chunk(b"IDAT", zlib.compress(bytes(raw)))
            + chunk(b"IEND", b""))


def decode_image(data: bytes) -> np.ndarray:
    """Decode PPM (P6) or PNG (8-bit RGB/RGBA) bytes into an RGB image.

    Raises MalformedFile on bad magic/header/truncation and UnsupportedFormat
    for valid files outside the supported subset (16-bit, paletted, ...).
    """
    if data[:len(_PNG_SIGNATURE)] == _PNG_SIGNATURE:
        return _decode_png(data)
    if data[:2] == b"P6":
        return _decode_ppm(data)
    raise MalformedFile("not a PPM (P6) or PNG file")


# ---------------------------------------------------------------------------
# Grayscale and smoothing
# ---------------------------------------------------------------------------

def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Convert RGB to gray with Rec. 601 weights: round(0.299 r + 0.587 g + 0.114 b)."""
    img = validate_rgb(img)
    f = img.astype(np.float64)
    gray = _LUMA_R * f[:, :, 0] + _LUMA_G * f[:, :, 1] + _LUMA_B * f[:, :, 2]
    return np.clip(np.rint(gray), 0, 255).astype(np.uint8)


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    """1-D Gaussian weights over offsets [-radius, radius], normalized to sum 1."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_smooth(img: np.ndarray, sigma: float = 1.0, radius: int = 2) -> np.ndarray:
    """Separable Gaussian smoothing with edge-clamp borders.

    Both passes run in float64; the result is rounded to the nearest integer
    once at the end, so a constant image is preserved exactly.
    """
    img = validate_gray(img)
    h, w = img.shape
    size = 2 * radius + 1
    if size > min(w, h):
        raise KernelTooLarge(f"kernel size {size} exceeds image dimension {min(w, h)}")
    kernel = gaussian_kernel(sigma, radius)

    acc = img.astype(np.float64)
    for axis in (0, 1):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (radius, radius)
        padded = np.pad(acc, pad, mode="edge")
        out = np.zeros_like(acc)
        for i, wk in enumerate(kernel):
            if axis == 0:
                out += wk * padded[i:i + h, :]
            else:
                out += wk * padded[:, i:i + w]
        acc = out
    return np.clip(np.rint(acc), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# HSV
# ---------------------------------------------------------------------------

def rgb_to_hsv(r: int, g: int, b: int) -> tuple[float, float, float]:
    """Standard hexcone RGB -> HSV: h in [0, 360), s and v in [0, 1].

    Achromatic pixels get h = 0 with s = 0, so classifiers must test
    saturation before hue.
    """
    mx = max(r, g, b)
    mn = min(r, g, b)
    v = mx / 255.0
    if mx == 0:
        return 0.0, 0.0, 0.0
    delta = mx - mn
    s = delta / mx
    if delta == 0:
        return 0.0, 0.0, v
    if mx == r:
        h = 60.0 * ((g - b) / delta)
    elif mx == g:
        h = 60.0 * (2.0 + (b - r) / delta)
    else:
        h = 60.0 * (4.0 + (r - g) / delta)
    if h < 0.0:
        h += 360.0
    elif h >= 360.0:
        h -= 360.0
    return h, s, v


def hsv_to_rgb(h: float, s: float, v: float) -> tuple[int, int, int]:
    """Inverse hexcone map back to byte RGB (rounds each channel)."""
    if s <= 0.0:
        x = int(math.floor(v * 255.0 + 0.5))
        return x, x, x
    hh = (h % 360.0) / 60.0
    sector = int(hh) % 6
    f = hh - int(hh)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    rgb = [
        (v, t, p), (q, v, p), (p, v, t),
        (p, q, v), (t, p, v), (v, p, q),
    ][sector]
    return tuple(int(math.floor(c * 255.0 + 0.5)) for c in rgb)
