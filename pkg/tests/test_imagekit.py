import math
import struct
import zlib

import numpy as np
import pytest

from seamcheck import (KernelTooLarge, MalformedFile, UnsupportedFormat,
                       decode_image, encode_image, encode_pgm, encode_png,
                       gaussian_kernel, gaussian_smooth, hsv_to_rgb, rgb_to_hsv,
                       to_grayscale)


def rgb(*rows):
    return np.array(rows, dtype=np.uint8)


class TestPpm:
    def test_single_pixel(self):
        img = decode_image(b"P6\n1 1\n255\n\xff\x00\x00")
        assert img.shape == (1, 1, 3)
        assert tuple(img[0, 0]) == (255, 0, 0)

    def test_pixel_order_row_major(self):
        data = b"P6\n2 2\n255\n" + bytes([1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12])
        img = decode_image(data)
        assert tuple(img[0, 0]) == (1, 2, 3)
        assert tuple(img[0, 1]) == (4, 5, 6)
        assert tuple(img[1, 0]) == (7, 8, 9)
        assert tuple(img[1, 1]) == (10, 11, 12)
        assert encode_image(img) == data

    def test_encode_minimal(self):
        img = np.zeros((1, 1, 3), dtype=np.uint8)
        assert encode_image(img) == b"P6\n1 1\n255\n" + b"\x00\x00\x00"

    def test_encode_payload_order(self):
        img = rgb([[1, 2, 3], [4, 5, 6]])
        assert encode_image(img)[-6:] == bytes([1, 2, 3, 4, 5, 6])

    def test_header_comments(self):
        data = b"P6\n# camera A\n2 1 # trailing\n255\n" + bytes(6)
        img = decode_image(data)
        assert img.shape == (1, 2, 3)

    def test_truncated_header(self):
        with pytest.raises(MalformedFile):
            decode_image(b"P6\n2 2\n")

    def test_truncated_payload(self):
        with pytest.raises(MalformedFile):
            decode_image(b"P6\n2 2\n255\n\x00\x00")

    def test_bad_magic(self):
        with pytest.raises(MalformedFile):
            decode_image(b"P5\n1 1\n255\n\x00")

    def test_sixteen_bit_rejected(self):
        with pytest.raises(UnsupportedFormat):
            decode_image(b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00")

    def test_roundtrip_random(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            h = int(rng.integers(1, 24))
            w = int(rng.integers(1, 24))
            img = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
            again = decode_image(encode_image(img))
            assert np.array_equal(img, again)

    def test_pgm(self):
        gray = np.arange(6, dtype=np.uint8).reshape(2, 3)
        assert encode_pgm(gray) == b"P5\n3 2\n255\n" + bytes(range(6))


class TestPng:
    def test_roundtrip_with_own_encoder(self):
        rng = np.random.default_rng(11)
        img = rng.integers(0, 256, size=(13, 9, 3), dtype=np.uint8)
        assert np.array_equal(decode_image(encode_png(img)), img)

    @staticmethod
    def _make_png(width, height, depth, color, pixels, filters=None):
        def chunk(ctype, body):
            return struct.pack(">I", len(body)) + ctype + body + struct.pack(
                ">I", zlib.crc32(ctype + body))

        channels = {0: 1, 2: 3, 3: 1, 6: 4}[color]
        raw = bytearray()
        for y in range(height):
            raw.append(0 if filters is None else filters[y])
            raw.extend(pixels[y * width * channels:(y + 1) * width * channels])
        ihdr = struct.pack(">IIBBBBB", width, height, depth, color, 0, 0, 0)
        return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr)
                + chunk(b"IDAT", zlib.compress(bytes(raw))) + chunk(b"IEND", b""))

    def test_rgba_alpha_discarded(self):
        pixels = bytes([10, 20, 30, 255, 40, 50, 60, 0])
        img = decode_image(self._make_png(2, 1, 8, 6, pixels))
        assert img.shape == (1, 2, 3)
        assert tuple(img[0, 0]) == (10, 20, 30)
        assert tuple(img[0, 1]) == (40, 50, 60)

    def test_sub_and_up_filters(self):
        # row 0 Sub-filtered, row 1 Up-filtered
        base = np.array([[[10, 10, 10], [250, 0, 5]],
                         [[9, 12, 10], [251, 1, 4]]], dtype=np.uint8)
        raw = bytearray()
        raw.append(1)  # Sub
        row0 = base[0].ravel().astype(np.int16)
        enc0 = row0.copy()
        enc0[3:] = (row0[3:] - row0[:-3]) % 256
        raw.extend(enc0.astype(np.uint8).tobytes())
        raw.append(2)  # Up
        enc1 = (base[1].ravel().astype(np.int16) - base[0].ravel()) % 256
        raw.extend(enc1.astype(np.uint8).tobytes())

        def chunk(ctype, body):
            return struct.pack(">I", len(body)) + ctype + body + struct.pack(
                ">I", zlib.crc32(ctype + body))

        data = (b"\x89PNG\r\n\x1a\n"
                + chunk(b"IHDR", struct.pack(">IIBBBBB", 2, 2, 8, 2, 0, 0, 0))
                + chunk(b"IDAT", zlib.compress(bytes(raw)))
                + chunk(b"IEND", b""))
        assert np.array_equal(decode_image(data), base)

    def test_sixteen_bit_rejected(self):
        data = self._make_png(1, 1, 16, 2, bytes(3))
        with pytest.raises(UnsupportedFormat):
            decode_image(data)

    def test_paletted_rejected(self):
        data = self._make_png(1, 1, 8, 3, bytes(1))
        with pytest.raises(UnsupportedFormat):
            decode_image(data)

    def test_corrupt_idat(self):
        good = self._make_png(2, 2, 8, 2, bytes(12))
        with pytest.raises(MalformedFile):
            decode_image(good[:40])


class TestGrayscale:
    def test_white_and_black(self):
        img = rgb([[255, 255, 255], [0, 0, 0]])
        assert to_grayscale(img).tolist() == [[255, 0]]

    def test_pure_red(self):
        # round(0.299 * 255) = 76
        img = rgb([[255, 0, 0]])
        assert to_grayscale(img)[0, 0] == 76

    def test_is_pointwise(self):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, size=(6, 5, 3), dtype=np.uint8)
        gray = to_grayscale(img)
        flipped = to_grayscale(img[::-1, ::-1])
        assert np.array_equal(gray[::-1, ::-1], flipped)


class TestGaussian:
    def test_kernel_normalized(self):
        for sigma in (0.4, 1.0, 2.5, 7.0):
            for radius in (1, 2, 5):
                assert abs(gaussian_kernel(sigma, radius).sum() - 1.0) < 1e-12

    def test_constant_preserved_exactly(self):
        img = np.full((10, 12), 100, dtype=np.uint8)
        for sigma in (0.5, 1.0, 3.0):
            assert np.array_equal(gaussian_smooth(img, sigma, 2), img)

    def test_impulse_center_value(self):
        img = np.zeros((11, 11), dtype=np.uint8)
        img[5, 5] = 255
        out = gaussian_smooth(img, sigma=1.0, radius=2)
        # direct kernel evaluation oracle
        k = np.arange(-2, 3, dtype=np.float64)
        w = np.exp(-(k * k) / 2.0)
        g0 = w[2] / w.sum()
        assert out[5, 5] == round(255.0 * g0 * g0)

    def test_kernel_too_large(self):
        img = np.zeros((10, 3), dtype=np.uint8)
        with pytest.raises(KernelTooLarge):
            gaussian_smooth(img, 1.0, radius=2)

    def test_output_within_input_range(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            img = rng.integers(30, 220, size=(9, 9), dtype=np.uint8)
            out = gaussian_smooth(img, 1.3, 2)
            assert out.min() >= img.min()
            assert out.max() <= img.max()


class TestHsv:
    unit_cases = [
        ((255, 0, 0), (0.0, 1.0, 1.0)),
        ((255, 255, 0), (60.0, 1.0, 1.0)),
        ((0, 255, 0), (120.0, 1.0, 1.0)),
        ((0, 255, 255), (180.0, 1.0, 1.0)),
        ((0, 0, 255), (240.0, 1.0, 1.0)),
        ((255, 0, 255), (300.0, 1.0, 1.0)),
        ((0, 0, 0), (0.0, 0.0, 0.0)),
        ((255, 255, 255), (0.0, 0.0, 1.0)),
    ]

    @pytest.mark.parametrize("rgb_in,expected", unit_cases)
    def test_exact_colors(self, rgb_in, expected):
        h, s, v = rgb_to_hsv(*rgb_in)
        assert (h, s) == expected[:2]
        assert v == expected[2]

    def test_mid_gray(self):
        h, s, v = rgb_to_hsv(128, 128, 128)
        assert h == 0.0 and s == 0.0
        assert math.isclose(v, 128 / 255)

    def test_roundtrip_within_one(self):
        rng = np.random.default_rng(13)
        for _ in range(2000):
            r, g, b = (int(v) for v in rng.integers(0, 256, size=3))
            rr, gg, bb = hsv_to_rgb(*rgb_to_hsv(r, g, b))
            assert abs(rr - r) <= 1 and abs(gg - g) <= 1 and abs(bb - b) <= 1
