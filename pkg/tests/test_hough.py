import math

import numpy as np
import pytest

from seamcheck import (EmptyImage, LineParams, NoSupport, extract_line_peaks,
                       hough_circles, hough_lines, line_extent,
                       midpoint_circle_offsets)

DEG = math.pi / 180.0


def raster_line(shape, rho, theta, thickness=0):
    """Axis-adaptive rasterization of rho = x cos(theta) + y sin(theta); keeps
    the perpendicular quantization error at or below half a pixel."""
    h, w = shape
    img = np.zeros(shape, dtype=bool)
    if abs(math.sin(theta)) >= math.sqrt(0.5):
        for x in range(w):
            y = (rho - x * math.cos(theta)) / math.sin(theta)
            yi = int(math.floor(y + 0.5))
            for d in range(-thickness, thickness + 1):
                if 0 <= yi + d < h:
                    img[yi + d, x] = True
    else:
        for y in range(h):
            x = (rho - y * math.sin(theta)) / math.cos(theta)
            xi = int(math.floor(x + 0.5))
            for d in range(-thickness, thickness + 1):
                if 0 <= xi + d < w:
                    img[y, xi + d] = True
    return img


def raster_circle(shape, cx, cy, radius):
    """Independent midpoint-circle rasterizer (re-derived, not the library's)."""
    img = np.zeros(shape, dtype=bool)
    x, y = radius, 0
    err = 1 - radius
    while x >= y:
        for dx, dy in ((x, y), (y, x), (-x, y), (-y, x),
                       (x, -y), (y, -x), (-x, -y), (-y, -x)):
            px, py = cx + dx, cy + dy
            if 0 <= px < shape[1] and 0 <= py < shape[0]:
                img[py, px] = True
        y += 1
        if err < 0:
            err += 2 * y + 1
        else:
            x -= 1
            err += 2 * (y - x) + 1
    return img


class TestLineAccumulator:
    def test_origin_pixel_votes_rho_zero_everywhere(self):
        img = np.zeros((20, 20), dtype=bool)
        img[0, 0] = True
        acc = hough_lines(img)
        assert acc.bins.sum() == acc.n_theta
        assert (acc.bins[:, acc.rho_offset] == 1).all()

    def test_vertical_line(self):
        img = np.zeros((50, 60), dtype=bool)
        img[:, 20] = True
        acc = hough_lines(img)
        ti, ri = np.unravel_index(np.argmax(acc.bins), acc.bins.shape)
        assert ti == 0  # theta = 0
        assert acc.bins[ti, ri] == 50
        assert abs(acc.rho_value(ri) - 20.0) <= acc.rho_step

    def test_diagonal_line(self):
        img = np.zeros((50, 50), dtype=bool)
        for i in range(50):
            img[i, i] = True
        acc = hough_lines(img)
        ti, ri = np.unravel_index(np.argmax(acc.bins), acc.bins.shape)
        assert abs(acc.theta_value(ti) - 3 * math.pi / 4) <= acc.theta_step / 2 + 1e-12
        assert abs(acc.rho_value(ri)) <= acc.rho_step

    def test_vote_conservation(self):
        rng = np.random.default_rng(4)
        img = rng.random((40, 30)) < 0.1
        img[0, 0] = True  # never empty
        acc = hough_lines(img)
        assert acc.bins.sum() == int(img.sum()) * acc.n_theta

    def test_empty_image(self):
        with pytest.raises(EmptyImage):
            hough_lines(np.zeros((10, 10), dtype=bool))

    def test_accumulator_dimensions(self):
        img = np.zeros((40, 30), dtype=bool)
        img[5, 5] = True
        acc = hough_lines(img, theta_step=DEG, rho_step=1.0)
        assert acc.n_theta == math.ceil(math.pi / DEG)
        assert acc.n_rho == math.ceil(2 * acc.diagonal / acc.rho_step)

    def test_translation_shifts_rho(self):
        rho, theta = 25.0, 70 * DEG
        base = raster_line((90, 90), rho, theta)
        dx, dy = 6, 9
        moved = np.zeros_like(base)
        ys, xs = np.nonzero(base)
        keep = (ys + dy < 90) & (xs + dx < 90)
        moved[ys[keep] + dy, xs[keep] + dx] = True
        acc_a = hough_lines(base)
        acc_b = hough_lines(moved)
        pa = extract_line_peaks(acc_a, 10)[0]
        pb = extract_line_peaks(acc_b, 10)[0]
        assert abs(pa.line.theta - pb.line.theta) <= acc_a.theta_step + 1e-12
        shift = dx * math.cos(pa.line.theta) + dy * math.sin(pa.line.theta)
        assert abs(pb.line.rho - (pa.line.rho + shift)) <= acc_a.rho_step + 1e-9


class TestPeakExtraction:
    def test_single_peak_at_threshold(self):
        img = np.zeros((50, 60), dtype=bool)
        img[:, 20] = True
        acc = hough_lines(img)
        peaks = extract_line_peaks(acc, vote_threshold=50)
        assert len(peaks) == 1
        assert peaks[0].votes == 50
        assert peaks[0].theta_index == 0
        assert abs(peaks[0].line.rho - 20.0) <= acc.rho_step

    def test_threshold_above_max(self):
        img = np.zeros((50, 60), dtype=bool)
        img[:, 20] = True
        acc = hough_lines(img)
        assert extract_line_peaks(acc, vote_threshold=51) == []

    def test_two_parallel_lines(self):
        img = np.zeros((50, 100), dtype=bool)
        img[:, 30] = True
        img[:, 60] = True
        peaks = extract_line_peaks(hough_lines(img), vote_threshold=45)
        assert len(peaks) == 2
        assert peaks[0].theta_index == peaks[1].theta_index == 0
        assert abs(abs(peaks[0].line.rho - peaks[1].line.rho) - 30.0) <= 1.0

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        img = rng.random((60, 60)) < 0.08
        img[10, :] = True
        acc = hough_lines(img)
        first = extract_line_peaks(acc, 20)
        second = extract_line_peaks(acc, 20)
        assert first == second

    def test_random_line_recovery(self):
        rng = np.random.default_rng(99)
        for _ in range(12):
            theta = int(rng.integers(0, 180)) * DEG
            rho = float(rng.uniform(40.0, 150.0))
            img = raster_line((200, 200), rho, theta)
            if img.sum() < 40:
                continue
            acc = hough_lines(img)
            top = extract_line_peaks(acc, vote_threshold=max(10, int(img.sum() // 3)))[0]
            assert abs(top.line.theta - theta) <= acc.theta_step + 1e-12
            assert abs(top.line.rho - rho) <= acc.rho_step + 1e-9


class TestCircles:
    def test_offsets_symmetric(self):
        offs = midpoint_circle_offsets(17)
        as_set = {(int(a), int(b)) for a, b in offs}
        assert all((-a, -b) in as_set for a, b in as_set)
        radii = np.hypot(offs[:, 0], offs[:, 1])
        assert np.all(np.abs(radii - 17) <= 0.5 + 1e-9)

    def test_single_circle_recovered(self):
        img = raster_circle((120, 120), 50, 50, 20)
        found = hough_circles(img, 20, 20)
        assert len(found) == 1
        c = found[0]
        assert math.hypot(c.cx - 50, c.cy - 50) <= 1.0
        assert c.radius == 20.0

    def test_wrong_radius_not_detected(self):
        img = raster_circle((120, 120), 50, 50, 20)
        assert hough_circles(img, 10, 10, vote_threshold_fraction=0.8) == []

    def test_two_disjoint_circles(self):
        img = raster_circle((160, 200), 40, 40, 20) | raster_circle((160, 200), 140, 100, 20)
        found = hough_circles(img, 20, 20)
        centers = sorted((c.cx, c.cy) for c in found)
        assert len(found) == 2
        assert math.hypot(centers[0][0] - 40, centers[0][1] - 40) <= 1.0
        assert math.hypot(centers[1][0] - 140, centers[1][1] - 100) <= 1.0

    def test_empty_image(self):
        with pytest.raises(EmptyImage):
            hough_circles(np.zeros((10, 10), dtype=bool), 3, 5)


class TestLineExtent:
    def test_partial_span(self):
        img = np.zeros((30, 60), dtype=bool)
        img[10, 10:41] = True
        line = LineParams(rho=10.0, theta=math.pi / 2)
        path = line_extent(img, line)
        # direct-scan oracle: hits exist in columns 10..40
        assert path.p0 == pytest.approx((10.0, 10.0), abs=1e-9)
        assert path.p1 == pytest.approx((40.0, 10.0), abs=1e-9)

    def test_full_width(self):
        img = np.zeros((30, 60), dtype=bool)
        img[10, :] = True
        path = line_extent(img, LineParams(rho=10.0, theta=math.pi / 2))
        assert path.p0[0] == pytest.approx(0.0)
        assert path.p1[0] == pytest.approx(59.0)

    def test_no_support(self):
        img = np.zeros((30, 60), dtype=bool)
        img[25, :] = True
        with pytest.raises(NoSupport):
            line_extent(img, LineParams(rho=10.0, theta=math.pi / 2))

    def test_endpoints_on_line(self):
        rng = np.random.default_rng(14)
        for _ in range(8):
            theta = int(rng.integers(0, 180)) * DEG
            rho = float(rng.uniform(30.0, 80.0))
            img = raster_line((100, 100), rho, theta)
            if not img.any():
                continue
            path = line_extent(img, LineParams(rho=rho, theta=theta))
            for px, py in (path.p0, path.p1):
                assert abs(px * math.cos(theta) + py * math.sin(theta) - rho) <= 0.5
