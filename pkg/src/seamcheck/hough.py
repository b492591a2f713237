"""Hough transforms for lines and circles, peak extraction, and path extents.

Coordinate conventions: origin at the top-left pixel, x to the right, y down.
A line is parameterized by the signed distance rho from the origin and the
normal angle theta in [0, pi), so every point on it satisfies

    rho = x * cos(theta) + y * sin(theta)

Accumulation is deterministic: theta bins are the sample angles
``j * theta_step``, rho bins uniformly cover [-D, D] where D is the image
diagonal, and every (pixel, theta bin) pair casts exactly one vote.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import EmptyImage, NoSupport

TWO_PI = 2.0 * math.pi

# strict-local-maximum window half-size for the circle center accumulator
_CIRCLE_NMS_RADIUS = 2


@dataclass(frozen=True)
class LineParams:
    """Line in normal form: rho = x cos(theta) + y sin(theta), theta in [0, pi)."""

    rho: float
    theta: float


@dataclass(frozen=True)
class LinePeak:
    """An accumulator maximum: the line at a bin center plus its vote count."""

    line: LineParams
    votes: int
    theta_index: int
    rho_index: int


@dataclass(frozen=True)
class CircleParams:
    """Detected circle: center (cx, cy), radius in pixels, accumulator score."""

    cx: float
    cy: float
    radius: float
    score: int


@dataclass(frozen=True)
class LinearPath:
    """Finite seam path along a detected line, from endpoint p0 to p1.

    Endpoints are ordered lexicographically by (x, y) so the parameterization
    is deterministic.  ``point_at``/``normal_at`` take arclength from p0.
    """

    line: LineParams
    p0: tuple[float, float]
    p1: tuple[float, float]

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    def point_at(self, s: float) -> tuple[float, float]:
        length = self.length
        if length == 0.0:
            return self.p0
        ux = (self.p1[0] - self.p0[0]) / length
        uy = (self.p1[1] - self.p0[1]) / length
        return self.p0[0] + s * ux, self.p0[1] + s * uy

    def normal_at(self, s: float) -> tuple[float, float]:
        return math.cos(self.line.theta), math.sin(self.line.theta)


@dataclass(frozen=True)
class CircularPath:
    """Seam path along a circle, parameterized by arclength from arc_start.

    Angles are measured from the +x axis with y pointing down.  For an arc,
    arc_start and arc_end must differ modulo 2*pi unless full_circle is set.
    """

    circle: CircleParams
    arc_start: float = 0.0
    arc_end: float = TWO_PI
    full_circle: bool = True

    def __post_init__(self):
        if not self.full_circle:
            if math.isclose((self.arc_start - self.arc_end) % TWO_PI, 0.0, abs_tol=1e-12):
                raise ValueError("arc endpoints coincide; flag full_circle instead")

    @property
    def length(self) -> float:
        return self.circle.radius * (self.arc_end - self.arc_start)

    def _angle_at(self, s: float) -> float:
        return self.arc_start + s / self.circle.radius

    def point_at(self, s: float) -> tuple[float, float]:
        phi = self._angle_at(s)
        return (self.circle.cx + self.circle.radius * math.cos(phi),
                self.circle.cy + self.circle.radius * math.sin(phi))

    def normal_at(self, s: float) -> tuple[float, float]:
        phi = self._angle_at(s)
        return math.cos(phi), math.sin(phi)


SeamPath = LinearPath | CircularPath


@dataclass(frozen=True)
class LineAccumulator:
    """Vote grid over (theta, rho) bins.

    ``bins[j, i]`` counts votes for theta = j * theta_step and the rho bin
    covering [-D + i*rho_step, -D + (i+1)*rho_step); bin centers sit at
    -D + (i + 0.5) * rho_step.  ``rho_offset`` is the index of the bin
    containing rho = 0.
    """

    bins: np.ndarray = field(repr=False)
    theta_step: float
    rho_step: float
    rho_offset: int
    diagonal: float

    @property
    def n_theta(self) -> int:
        return self.bins.shape[0]

    @property
    def n_rho(self) -> int:
        return self.bins.shape[1]

    def theta_value(self, theta_index: int) -> float:
        return theta_index * self.theta_step

    def rho_value(self, rho_index: int) -> float:
        return -self.diagonal + (rho_index + 0.5) * self.rho_step


def hough_lines(binary: np.ndarray, theta_step: float = math.pi / 180.0,
                rho_step: float = 1.0) -> LineAccumulator:
    """Accumulate line votes for every foreground pixel at every theta bin.

    Total votes equal (#foreground pixels) * (#theta bins) exactly.  Raises
    EmptyImage when there is no foreground, so callers can distinguish
    "no seam present" from "no peak above threshold".
    """
    if theta_step <= 0 or rho_step <= 0:
        raise ValueError("theta_step and rho_step must be positive")
    if binary.ndim != 2 or binary.dtype != np.bool_:
        raise ValueError("expected a boolean (h, w) image")
    ys, xs = np.nonzero(binary)
    if xs.size == 0:
        raise EmptyImage("no foreground pixels to vote")
    h, w = binary.shape
    diagonal = math.hypot(w - 1, h - 1)
    n_theta = math.ceil(math.pi / theta_step)
    n_rho = max(1, math.ceil(2.0 * diagonal / rho_step))

    xs_f = xs.astype(np.float64)
    ys_f = ys.astype(np.float64)
    bins = np.zeros((n_theta, n_rho), dtype=np.int64)
    for j in range(n_theta):
        theta = j * theta_step
        r = xs_f * math.cos(theta) + ys_f * math.sin(theta)
        idx = np.floor((r + diagonal) / rho_step).astype(np.int64)
        np.clip(idx, 0, n_rho - 1, out=idx)
        bins[j] = np.bincount(idx, minlength=n_rho)

    rho_offset = min(n_rho - 1, int(math.floor(diagonal / rho_step)))
    return LineAccumulator(bins=bins, theta_step=theta_step, rho_step=rho_step,
                           rho_offset=rho_offset, diagonal=diagonal)


def _is_strict_peak(bins: np.ndarray, ti: int, ri: int, radius: int) -> bool:
    """True when (ti, ri) dominates its window; exact ties lose to
    lexicographically smaller (theta_index, rho_index) positions."""
    v = bins[ti, ri]
    t0, t1 = max(0, ti - radius), min(bins.shape[0], ti + radius + 1)
    r0, r1 = max(0, ri - radius), min(bins.shape[1], ri + radius + 1)
    window = bins[t0:t1, r0:r1]
    if (window > v).any():
        return False
    for dt, dr in np.argwhere(window == v):
        tj, rj = t0 + int(dt), r0 + int(dr)
        if (tj, rj) < (ti, ri):
            return False
    return True


def extract_line_peaks(acc: LineAccumulator, vote_threshold: int,
                       nms_radius: int = 2) -> list[LinePeak]:
    """Bins with votes >= vote_threshold that are strict maxima of their
    (2*nms_radius+1)^2 neighborhood, sorted by descending votes.

    Ties in the neighborhood are broken toward smaller theta_index, then
    smaller rho_index, so a flat plateau yields exactly one peak and the
    output is deterministic.  An empty list is a valid result.
    """
    if vote_threshold < 1:
        raise ValueError("vote_threshold must be >= 1")
    if nms_radius < 0:
        raise ValueError("nms_radius must be >= 0")
    peaks = []
    for ti, ri in np.argwhere(acc.bins >= vote_threshold):
        ti, ri = int(ti), int(ri)
        if _is_strict_peak(acc.bins, ti, ri, nms_radius):
            line = LineParams(rho=acc.rho_value(ri), theta=acc.theta_value(ti))
            peaks.append(LinePeak(line=line, votes=int(acc.bins[ti, ri]),
                                  theta_index=ti, rho_index=ri))
    peaks.sort(key=lambda p: (-p.votes, p.theta_index, p.rho_index))
    return peaks


@lru_cache(maxsize=256)
def _circle_offsets_cached(radius: int) -> tuple[tuple[int, int], ...]:
    pts = set()
    x, y, d = radius, 0, 1 - radius
    while x >= y:
        pts.update([(x, y), (y, x), (-x, y), (-y, x),
                    (x, -y), (y, -x), (-x, -y), (-y, -x)])
        y += 1
        if d < 0:
            d += 2 * y + 1
        else:
            x -= 1
            d += 2 * (y - x) + 1
    return tuple(sorted(pts))


def midpoint_circle_offsets(radius: int) -> np.ndarray:
    """Unique (dx, dy) offsets of the midpoint-rasterized circle, sorted.

    The offset set is symmetric under negation, so a rasterized circle votes
    its own center exactly once per circle pixel.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    return np.array(_circle_offsets_cached(int(radius)), dtype=np.int64)


def hough_circles(binary: np.ndarray, r_min: float, r_max: float,
                  r_step: float = 1.0,
                  vote_threshold_fraction: float = 0.8) -> list[CircleParams]:
    """Detect circles by center voting at each candidate radius.

    For each radius on the grid, every foreground pixel votes along the
    midpoint-rasterized circle centered at itself.  Centers whose votes reach
    ``vote_threshold_fraction`` of the rasterization point count and that are
    strict local maxima are kept; detections across radii with centers closer
    than 2 * r_step are suppressed, highest score first.
    """
    if not 0 < r_min <= r_max:
        raise ValueError("need 0 < r_min <= r_max")
    if r_step <= 0:
        raise ValueError("r_step must be positive")
    if not 0 < vote_threshold_fraction <= 1:
        raise ValueError("vote_threshold_fraction must be in (0, 1]")
    if binary.ndim != 2 or binary.dtype != np.bool_:
        raise ValueError("expected a boolean (h, w) image")
    ys, xs = np.nonzero(binary)
    if xs.size == 0:
        raise EmptyImage("no foreground pixels to vote")
    h, w = binary.shape

    radii = []
    r = float(r_min)
    while r <= r_max + 1e-9:
        radii.append(r)
        r += r_step

    candidates = []
    for radius in radii:
        offsets = midpoint_circle_offsets(int(round(radius)))
        ideal = offsets.shape[0]
        cx = xs[:, None] - offsets[None, :, 0]
        cy = ys[:, None] - offsets[None, :, 1]
        ok = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
        flat = cy[ok] * w + cx[ok]
        acc = np.bincount(flat, minlength=h * w).reshape(h, w)
        threshold = vote_threshold_fraction * ideal
        for yc, xc in np.argwhere(acc >= threshold):
            yc, xc = int(yc), int(xc)
            if _is_strict_peak(acc, yc, xc, _CIRCLE_NMS_RADIUS):
                candidates.append((int(acc[yc, xc]), radius, xc, yc))

    candidates.sort(key=lambda c: (-c[0], c[1], c[3], c[2]))
    kept: list[CircleParams] = []
    min_dist = 2.0 * r_step
    for score, radius, xc, yc in candidates:
        if all(math.hypot(xc - k.cx, yc - k.cy) >= min_dist for k in kept):
            kept.append(CircleParams(cx=float(xc), cy=float(yc),
                                     radius=float(radius), score=score))
    return kept


def line_extent(binary: np.ndarray, line: LineParams,
                gap_tolerance: float = 5.0) -> LinearPath:
    """Finite span of a detected line: from the first to the last foreground
    pixel within 1 px of it.

    Interior gaps never split the span regardless of size -- downstream rule
    checks must see missing regions -- so ``gap_tolerance`` only documents the
    gap size considered ordinary stitch spacing.  The extent is clipped at the
    outermost supporting pixels.  Raises NoSupport when nothing lies within
    1 px of the line.
    """
    if binary.ndim != 2 or binary.dtype != np.bool_:
        raise ValueError("expected a boolean (h, w) image")
    ys, xs = np.nonzero(binary)
    cos_t, sin_t = math.cos(line.theta), math.sin(line.theta)
    if xs.size:
        r = xs * cos_t + ys * sin_t
        near = np.abs(r - line.rho) <= 1.0
    else:
        near = np.zeros(0, dtype=bool)
    if not near.any():
        raise NoSupport(f"no foreground within 1 px of rho={line.rho:.2f}, theta={line.theta:.4f}")
    # position along the line direction (-sin, cos), measured from the foot
    # of the perpendicular from the origin
    t = -xs[near] * sin_t + ys[near] * cos_t
    t_lo, t_hi = float(t.min()), float(t.max())
    foot = (line.rho * cos_t, line.rho * sin_t)
    pa = (foot[0] - t_lo * sin_t, foot[1] + t_lo * cos_t)
    pb = (foot[0] - t_hi * sin_t, foot[1] + t_hi * cos_t)
    p0, p1 = sorted((pa, pb))
    return LinearPath(line=line, p0=p0, p1=p1)


def accumulator_image(acc: LineAccumulator) -> np.ndarray:
    """Accumulator scaled to a 0-255 grayscale image (theta rows, rho columns)."""
    peak = int(acc.bins.max())
    if peak == 0:
        return np.zeros(acc.bins.shape, dtype=np.uint8)
    return (acc.bins * 255 // peak).astype(np.uint8)
