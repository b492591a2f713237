"""Seam inspection pipeline: color classification along detected paths and
stitch-rule validation.

The pipeline stages are: grayscale -> Gaussian smoothing -> histogram ->
optimal threshold -> binarization -> line/circle path recognition -> color
sampling along each path (5x1 window perpendicular to it) -> rule checks for
the three defect classes (missing stitch, skipped stitch, superimposed seam)
-> report assembly.  Everything is a pure function of (image, config), so
reports are deterministic byte for byte.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import binarization, hough, imagekit
from .config import ColorBand, ColorClass, InspectionConfig, StitchRule
from .errors import (DegenerateHistogram, EmptyImage, KernelTooLarge, NoSupport,
                     PathOutsideImage)
from .hough import (CircleParams, CircularPath, LineAccumulator, LineParams,
                    SeamPath)

# perpendicular sampling offsets in nearest-to-center order; the order is the
# tie-break for majority voting
_WINDOW_OFFSETS = (0, -1, 1, -2, 2)
_WINDOW_HALF = 2

# support half-width (px) used to re-center a quantized path inside the thread
_REFINE_HALFWIDTH = 5.0
_REFINE_ITERATIONS = 2

# near-duplicate path signature (informational note, not a defect)
_DUP_THETA_BINS = 3
_DUP_RHO_PX = 6.0

_SUPERIMPOSED_WINDOW_STITCHES = 4

PATH_COLOR = (0, 255, 0)
DEFECT_COLOR = (255, 0, 0)


class DefectKind(Enum):
    MISSING_STITCH = "missing_stitch"
    SKIPPED_STITCH = "skipped_stitch"
    SUPERIMPOSED_SEAM = "superimposed_seam"


class Verdict(Enum):
    PASS = "pass"
    FAIL = "fail"


@dataclass(frozen=True)
class PathSample:
    """One classified sample: position on the path, arclength from its start,
    and the majority thread color of the 5x1 perpendicular window."""

    position: tuple[float, float]
    arclength: float
    color: ColorClass


@dataclass(frozen=True)
class SampleSequence:
    path: SeamPath
    step: float
    samples: tuple[PathSample, ...]


@dataclass(frozen=True)
class Defect:
    kind: DefectKind
    span: tuple[float, float]
    bbox: tuple[int, int, int, int]
    detail: str
    path_index: int = 0


@dataclass(frozen=True)
class PathReport:
    path: SeamPath
    rule: StitchRule
    score: int


@dataclass(frozen=True)
class InspectionReport:
    image_id: str
    paths: tuple[PathReport, ...]
    defects: tuple[Defect, ...]
    verdict: Verdict
    diagnostics: tuple[str, ...]
    notes: tuple[str, ...]
    params: dict


@dataclass(frozen=True)
class PipelineResult:
    """Report plus intermediate stages, for debugging and the CLI dump flags."""

    report: InspectionReport
    gray: np.ndarray | None = None
    smoothed: np.ndarray | None = None
    binary: np.ndarray | None = None
    threshold: binarization.ThresholdResult | None = None
    line_accumulator: LineAccumulator | None = None
    timings_ms: dict = field(default_factory=dict)


def _px(v: float) -> int:
    """Nearest pixel index, halves rounding up (stable, platform independent)."""
    return int(math.floor(v + 0.5))


def classify_pixel(hsv: tuple[float, float, float],
                   bands: tuple[ColorBand, ...]) -> ColorClass:
    """Class of the unique band containing the pixel, else BACKGROUND.

    Bands are validated pairwise disjoint at configuration load time, so the
    first match is the only match.
    """
    h, s, v = hsv
    for band in bands:
        if band.contains(h, s, v):
            return band.color
    return ColorClass.BACKGROUND


def _classify_window(img: np.ndarray, center: tuple[float, float],
                     normal: tuple[float, float],
                     bands: tuple[ColorBand, ...]) -> ColorClass | None:
    """Majority non-background class of the 5 pixels perpendicular to the path.

    Returns None when the center pixel falls outside the image (the sample is
    dropped).  Ties go to the class of the in-window pixel nearest the path
    center; an all-background window is BACKGROUND.
    """
    h, w = img.shape[:2]
    cx = _px(center[0])
    cy = _px(center[1])
    if not (0 <= cx < w and 0 <= cy < h):
        return None
    classes: list[ColorClass] = []
    for off in _WINDOW_OFFSETS:
        x = _px(center[0] + off * normal[0])
        y = _px(center[1] + off * normal[1])
        if not (0 <= x < w and 0 <= y < h):
            continue
        r, g, b = img[y, x]
        classes.append(classify_pixel(imagekit.rgb_to_hsv(int(r), int(g), int(b)), bands))
    counts: dict[ColorClass, int] = {}
    for c in classes:
        if c is not ColorClass.BACKGROUND:
            counts[c] = counts.get(c, 0) + 1
    if not counts:
        return ColorClass.BACKGROUND
    best = max(counts.values())
    tied = {c for c, n in counts.items() if n == best}
    if len(tied) == 1:
        return next(iter(tied))
    for c in classes:  # classes are already in nearest-to-center order
        if c in tied:
            return c
    return ColorClass.BACKGROUND  # unreachable


def sample_path(img: np.ndarray, path: SeamPath, step: float,
                bands: tuple[ColorBand, ...]) -> SampleSequence:
    """Classify the seam at every arclength multiple of ``step`` along a path.

    Samples whose center pixel lies outside the image are dropped (expected
    only at the ends of a clipped path).  Raises PathOutsideImage when no
    sample survives.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    img = imagekit.validate_rgb(img)
    length = path.length
    full_circle = isinstance(path, CircularPath) and path.full_circle
    samples = []
    k = 0
    while True:
        s = k * step
        if full_circle:
            if s >= length - 1e-9:
                break
        elif s > length + 1e-9:
            break
        center = path.point_at(s)
        normal = path.normal_at(s)
        color = _classify_window(img, center, normal, bands)
        if color is not None:
            samples.append(PathSample(position=center, arclength=s, color=color))
        k += 1
    if not samples:
        raise PathOutsideImage("no sample point of the path lies inside the image")
    return SampleSequence(path=path, step=step, samples=tuple(samples))


def _bbox_of_range(seq: SampleSequence, a: float, b: float) -> tuple[int, int, int, int]:
    xs = [s.position[0] for s in seq.samples if a - 1e-9 <= s.arclength < b + 1e-9]
    ys = [s.position[1] for s in seq.samples if a - 1e-9 <= s.arclength < b + 1e-9]
    return (int(math.floor(min(xs) - _WINDOW_HALF)), int(math.floor(min(ys) - _WINDOW_HALF)),
            int(math.ceil(max(xs) + _WINDOW_HALF)), int(math.ceil(max(ys) + _WINDOW_HALF)))


def detect_missing(seq: SampleSequence, rule: StitchRule) -> list[Defect]:
    """Background runs longer than max_gap_stitches * pitch, one defect each.

    A run of k consecutive background samples covers k * step of arclength;
    ordinary inter-stitch gaps stay below the limit.
    """
    if not seq.samples:
        raise ValueError("empty sample sequence")
    limit = rule.max_gap_stitches * rule.pitch
    defects = []
    run_start: int | None = None
    samples = seq.samples
    for i in range(len(samples) + 1):
        background = i < len(samples) and samples[i].color is ColorClass.BACKGROUND
        if background and run_start is None:
            run_start = i
        elif not background and run_start is not None:
            count = i - run_start
            extent = count * seq.step
            if extent > limit:
                a = samples[run_start].arclength
                b = samples[i - 1].arclength + seq.step
                detail = (f"background run of {extent:.1f} px exceeds {limit:.1f} px "
                          f"({rule.max_gap_stitches:g} x pitch {rule.pitch:g})")
                defects.append(Defect(kind=DefectKind.MISSING_STITCH, span=(a, b),
                                      bbox=_bbox_of_range(seq, a, b), detail=detail))
            run_start = None
    return defects


def _window_colors(seq: SampleSequence, pitch: float) -> list[tuple[float, set[ColorClass]]]:
    """Consecutive full pitch windows from the first sample on: (start, colors).

    The trailing partial window is not evaluated; a clipped window would
    report spurious missing colors.
    """
    samples = seq.samples
    origin = samples[0].arclength
    total = samples[-1].arclength + seq.step - origin
    n_windows = int(math.floor(total / pitch + 1e-9))
    windows = []
    for m in range(n_windows):
        lo = origin + m * pitch
        hi = lo + pitch
        colors = {s.color for s in samples if lo - 1e-9 <= s.arclength < hi - 1e-9}
        windows.append((lo, colors))
    return windows


def detect_skipped(seq: SampleSequence, rule: StitchRule,
                   min_consecutive: int = 1) -> list[Defect]:
    """Pitch windows where thread is present but a required color is absent.

    All-background windows belong to missing-stitch detection and are never
    marked here.  Runs of at least ``min_consecutive`` marked windows become
    one defect each.
    """
    if not seq.samples:
        raise ValueError("empty sample sequence")
    required = rule.required_colors
    windows = _window_colors(seq, rule.pitch)
    marked = []
    for lo, colors in windows:
        has_thread = any(c is not ColorClass.BACKGROUND for c in colors)
        marked.append(has_thread and not required.issubset(colors))
    defects = []
    i = 0
    while i < len(marked):
        if not marked[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(marked) and marked[j + 1]:
            j += 1
        if j - i + 1 >= min_consecutive:
            a = windows[i][0]
            b = windows[j][0] + rule.pitch
            detail = (f"required thread color absent in {j - i + 1} consecutive "
                      f"stitch window(s) of pitch {rule.pitch:g}")
            defects.append(Defect(kind=DefectKind.SKIPPED_STITCH, span=(a, b),
                                  bbox=_bbox_of_range(seq, a, b), detail=detail))
        i = j + 1
    return defects


def detect_superimposed(seq: SampleSequence, rule: StitchRule,
                        nominal_coverage: float = 0.5) -> list[Defect]:
    """Sliding windows of 4 * pitch whose thread coverage exceeds
    nominal_coverage * coverage_max; overlapping windows merge into one defect.

    ``nominal_coverage`` is the thread fraction of a conforming seam, so a
    doubled seam roughly doubles the ratio and crosses the limit.
    """
    if not seq.samples:
        raise ValueError("empty sample sequence")
    window_len = _SUPERIMPOSED_WINDOW_STITCHES * rule.pitch
    limit = nominal_coverage * rule.coverage_max
    samples = seq.samples
    origin = samples[0].arclength
    total = samples[-1].arclength + seq.step - origin
    flagged: list[tuple[float, float, float]] = []
    m = 0
    while origin + m * rule.pitch + window_len <= origin + total + 1e-9:
        lo = origin + m * rule.pitch
        hi = lo + window_len
        inside = [s for s in samples if lo - 1e-9 <= s.arclength < hi - 1e-9]
        if inside:
            coverage = sum(1 for s in inside if s.color is not ColorClass.BACKGROUND) / len(inside)
            if coverage > limit:
                flagged.append((lo, hi, coverage))
        m += 1
    defects = []
    i = 0
    while i < len(flagged):
        lo, hi, peak = flagged[i]
        j = i
        while j + 1 < len(flagged) and flagged[j + 1][0] <= hi + 1e-9:
            j += 1
            hi = max(hi, flagged[j][1])
            peak = max(peak, flagged[j][2])
        detail = (f"thread coverage {peak:.2f} exceeds {limit:.2f} "
                  f"(nominal {nominal_coverage:g} x coverage_max {rule.coverage_max:g})")
        defects.append(Defect(kind=DefectKind.SUPERIMPOSED_SEAM, span=(lo, hi),
                              bbox=_bbox_of_range(seq, lo, hi), detail=detail))
        i = j + 1
    return defects


def _merge_close(defects: list[Defect], pitch: float) -> list[Defect]:
    """Merge same-kind defects on one path separated by less than one pitch."""
    merged: list[Defect] = []
    for d in sorted(defects, key=lambda d: (d.kind.value, d.span[0])):
        if merged and merged[-1].kind is d.kind and d.span[0] - merged[-1].span[1] < pitch:
            prev = merged[-1]
            bbox = (min(prev.bbox[0], d.bbox[0]), min(prev.bbox[1], d.bbox[1]),
                    max(prev.bbox[2], d.bbox[2]), max(prev.bbox[3], d.bbox[3]))
            merged[-1] = replace(prev, span=(prev.span[0], max(prev.span[1], d.span[1])),
                                 bbox=bbox, detail=prev.detail + "; merged with adjacent region")
        else:
            merged.append(d)
    return merged


def _refine_line(binary: np.ndarray, line: LineParams) -> LineParams:
    """Re-center a quantized line on its supporting pixels (median offset).

    Peak extraction can land on the edge of a thick thread; two median passes
    pull rho to the thread center so the sampling window stays on the thread.
    """
    ys, xs = np.nonzero(binary)
    if xs.size == 0:
        return line
    r = xs * math.cos(line.theta) + ys * math.sin(line.theta)
    rho = line.rho
    for _ in range(_REFINE_ITERATIONS):
        sel = np.abs(r - rho) <= _REFINE_HALFWIDTH
        if not sel.any():
            break
        rho = float(np.median(r[sel]))
    return LineParams(rho=rho, theta=line.theta)


def _refine_circle(binary: np.ndarray, circle: CircleParams) -> CircleParams:
    """Re-center a detected radius inside the thread annulus (median distance)."""
    ys, xs = np.nonzero(binary)
    if xs.size == 0:
        return circle
    d = np.hypot(xs - circle.cx, ys - circle.cy)
    radius = circle.radius
    for _ in range(_REFINE_ITERATIONS):
        sel = np.abs(d - radius) <= _REFINE_HALFWIDTH
        if not sel.any():
            break
        radius = float(np.median(d[sel]))
    return CircleParams(cx=circle.cx, cy=circle.cy, radius=radius, score=circle.score)


def _recognize_paths(binary: np.ndarray, cfg: InspectionConfig,
                     diagnostics: list[str], notes: list[str]):
    """Line and/or circle recognition; returns (path entries, line accumulator)."""
    from .config import GeometryMode

    entries: list[tuple[int, int, PathReport]] = []  # (-score, order) for sorting
    accumulator = None
    order = 0
    if cfg.geometry in (GeometryMode.LINES, GeometryMode.BOTH):
        try:
            accumulator = hough.hough_lines(binary, cfg.hough.theta_step, cfg.hough.rho_step)
        except EmptyImage:
            diagnostics.append("binarized image has no foreground pixels")
        else:
            peaks = hough.extract_line_peaks(accumulator, cfg.hough.vote_threshold,
                                             cfg.hough.nms_radius)
            if cfg.hough.max_lines is not None:
                peaks = peaks[:cfg.hough.max_lines]
            for a, pa in enumerate(peaks):
                for pb in peaks[a + 1:]:
                    if (abs(pa.theta_index - pb.theta_index) <= _DUP_THETA_BINS
                            and abs(pa.line.rho - pb.line.rho) <= _DUP_RHO_PX):
                        notes.append(
                            f"near-duplicate line peaks at theta index {pa.theta_index}/"
                            f"{pb.theta_index}: possible doubled seam")
            for peak in peaks:
                refined = _refine_line(binary, peak.line)
                try:
                    path = hough.line_extent(binary, refined, cfg.gap_tolerance)
                except NoSupport:
                    diagnostics.append(
                        f"line peak at theta index {peak.theta_index} lost support "
                        f"after refinement")
                    continue
                entries.append((-peak.votes, order, PathReport(path=path, rule=cfg.line_rule,
                                                               score=peak.votes)))
                order += 1
    if cfg.geometry in (GeometryMode.CIRCLES, GeometryMode.BOTH):
        try:
            circles = hough.hough_circles(binary, cfg.hough.r_min, cfg.hough.r_max,
                                          cfg.hough.r_step, cfg.hough.circle_vote_fraction)
        except EmptyImage:
            if cfg.geometry is GeometryMode.CIRCLES:
                diagnostics.append("binarized image has no foreground pixels")
            circles = []
        if cfg.hough.max_circles is not None:
            circles = circles[:cfg.hough.max_circles]
        for circle in circles:
            refined = _refine_circle(binary, circle)
            path = CircularPath(circle=refined)
            entries.append((-circle.score, order, PathReport(path=path, rule=cfg.circle_rule,
                                                             score=circle.score)))
            order += 1
    entries.sort(key=lambda e: (e[0], e[1]))
    return [e[2] for e in entries], accumulator


_KIND_ORDER = {DefectKind.MISSING_STITCH: 0, DefectKind.SKIPPED_STITCH: 1,
               DefectKind.SUPERIMPOSED_SEAM: 2}


def run_pipeline(img: np.ndarray, cfg: InspectionConfig,
                 image_id: str = "image") -> PipelineResult:
    """Full inspection with intermediate stages and per-stage timings.

    Degenerate stages (constant histogram, empty binary image, unsupported
    path) produce a FAIL report with a diagnostic instead of raising: an
    inspection station always emits a verdict.
    """
    img = imagekit.validate_rgb(img)
    h, w = img.shape[:2]
    diagnostics: list[str] = []
    notes: list[str] = []
    timings: dict[str, float] = {}

    def tick(name, t0):
        timings[name] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    gray = imagekit.to_grayscale(img)
    tick("grayscale", t0)

    smoothed = None
    threshold = None
    binary = None
    paths: list[PathReport] = []
    accumulator = None

    t0 = time.perf_counter()
    try:
        smoothed = imagekit.gaussian_smooth(gray, cfg.smooth_sigma, cfg.smooth_radius)
    except KernelTooLarge as exc:
        diagnostics.append(f"smoothing failed: {exc}")
    tick("smooth", t0)

    if smoothed is not None:
        t0 = time.perf_counter()
        hist = binarization.histogram(smoothed)
        try:
            threshold = binarization.otsu_threshold(hist)
        except DegenerateHistogram:
            diagnostics.append("degenerate histogram: image has a single intensity level")
        tick("threshold", t0)

    if threshold is not None:
        t0 = time.perf_counter()
        binary = binarization.binarize(smoothed, threshold.t, cfg.polarity)
        tick("binarize", t0)

        t0 = time.perf_counter()
        paths, accumulator = _recognize_paths(binary, cfg, diagnostics, notes)
        tick("recognize", t0)

    if not paths:
        diagnostics.append("no seam path detected")

    t0 = time.perf_counter()
    defects: list[Defect] = []
    for index, entry in enumerate(paths):
        try:
            seq = sample_path(img, entry.path, cfg.sample_step, cfg.bands)
        except PathOutsideImage:
            diagnostics.append(f"path {index} lies outside the image")
            continue
        found = (detect_missing(seq, entry.rule)
                 + detect_skipped(seq, entry.rule, cfg.min_consecutive)
                 + detect_superimposed(seq, entry.rule, cfg.nominal_coverage))
        for d in _merge_close(found, entry.rule.pitch):
            bbox = (max(0, d.bbox[0]), max(0, d.bbox[1]),
                    min(w - 1, d.bbox[2]), min(h - 1, d.bbox[3]))
            defects.append(replace(d, path_index=index, bbox=bbox))
    defects.sort(key=lambda d: (d.path_index, d.span[0], _KIND_ORDER[d.kind]))
    tick("validate", t0)

    verdict = Verdict.FAIL if (defects or diagnostics) else Verdict.PASS
    report = InspectionReport(image_id=image_id, paths=tuple(paths),
                              defects=tuple(defects), verdict=verdict,
                              diagnostics=tuple(diagnostics), notes=tuple(notes),
                              params=cfg.to_dict())
    return PipelineResult(report=report, gray=gray, smoothed=smoothed, binary=binary,
                          threshold=threshold, line_accumulator=accumulator,
                          timings_ms=timings)


def inspect(img: np.ndarray, cfg: InspectionConfig,
            image_id: str = "image") -> InspectionReport:
    """Inspect one image against a configuration; deterministic for fixed inputs."""
    return run_pipeline(img, cfg, image_id).report


def _draw_pixel(out: np.ndarray, x: int, y: int, color: tuple[int, int, int]) -> None:
    if 0 <= x < out.shape[1] and 0 <= y < out.shape[0]:
        out[y, x] = color


def annotate(img: np.ndarray, report: InspectionReport) -> np.ndarray:
    """Copy of the image with detected paths drawn in pure green and defect
    boxes outlined in pure red (red drawn over green)."""
    out = imagekit.validate_rgb(img).copy()
    for entry in report.paths:
        path = entry.path
        n_steps = max(1, int(math.ceil(path.length / 0.5)))
        for k in range(n_steps + 1):
            s = min(k * 0.5, path.length)
            x, y = path.point_at(s)
            _draw_pixel(out, _px(x), _px(y), PATH_COLOR)
    for defect in report.defects:
        x0, y0, x1, y1 = defect.bbox
        for x in range(x0, x1 + 1):
            _draw_pixel(out, x, y0, DEFECT_COLOR)
            _draw_pixel(out, x, y1, DEFECT_COLOR)
        for y in range(y0, y1 + 1):
            _draw_pixel(out, x0, y, DEFECT_COLOR)
            _draw_pixel(out, x1, y, DEFECT_COLOR)
    return out
