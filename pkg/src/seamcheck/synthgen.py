"""Deterministic synthetic seam scenes with injected defects and ground truth.

A scene is fabric plus one or more stitched paths.  Each stitch cell of
length ``pitch`` renders a thread block over its first half -- the needle
color followed by the second required color, each ``pitch/4`` long -- and
leaves the second half bare, giving a conforming seam a thread coverage of
0.5 along the path.  Injected defects modify the pattern inside their span:

* missing stitch:    nothing is drawn,
* skipped stitch:    only the needle color is drawn,
* superimposed seam: the block pattern is drawn a second time at a
  half-pitch offset, doubling coverage.

Rendering is bit-stable across runs and platforms: noise comes from a
counter-mode splitmix64 generator (12 uniform draws summed per value,
Irwin-Hall approximation of a Gaussian), using only integer mixing and IEEE
basic float operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ColorClass, StitchRule, rule_from_dict, rule_to_dict
from .errors import SpecInvalid
from .hough import CircleParams, CircularPath, LinearPath, LineParams, SeamPath, TWO_PI
from .inspection import DefectKind, InspectionReport

THREAD_RGB: dict[ColorClass, tuple[int, int, int]] = {
    ColorClass.NEEDLE_RED: (200, 30, 40),
    ColorClass.BOBBIN_GREEN: (40, 170, 70),
    ColorClass.LOOPER_ORANGE: (235, 140, 30),
}

DEFAULT_FABRIC_RGB = (210, 210, 205)

_PAINT_STEP = 0.5

# splitmix64 constants
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1DF4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = (1 << 64) - 1
_IRWIN_HALL_DRAWS = 12


def splitmix64_stream(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Counter-mode splitmix64: element i is mix(seed + (offset+i+1) * golden).

    Pure uint64 arithmetic (wrapping mod 2**64), so the stream is identical
    on every platform.
    """
    idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _U64) + idx * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def gaussian_field(seed: int, count: int) -> np.ndarray:
    """Approximately standard-normal values: sum of 12 uniforms minus 6."""
    acc = np.zeros(count, dtype=np.float64)
    for j in range(_IRWIN_HALL_DRAWS):
        u = splitmix64_stream(seed, count, offset=j * count)
        acc += u.astype(np.float64) / float(1 << 64)
    return acc - 6.0


@dataclass(frozen=True)
class InjectedDefect:
    kind: DefectKind
    span: tuple[float, float]


@dataclass(frozen=True)
class ScenePath:
    geometry: SeamPath
    rule: StitchRule
    thread_width: int = 9
    injected: tuple[InjectedDefect, ...] = ()


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    fabric_rgb: tuple[int, int, int] = DEFAULT_FABRIC_RGB
    fabric_noise_sigma: float = 0.0
    paths: tuple[ScenePath, ...] = ()
    rng_seed: int = 0


@dataclass(frozen=True)
class TruthPath:
    geometry: SeamPath
    rule: StitchRule
    defects: tuple[InjectedDefect, ...]


@dataclass(frozen=True)
class GroundTruth:
    paths: tuple[TruthPath, ...]


def _validate_scene(spec: SceneSpec) -> None:
    if spec.width < 1 or spec.height < 1:
        raise SpecInvalid("canvas must be at least 1x1")
    if spec.fabric_noise_sigma < 0:
        raise SpecInvalid("fabric_noise_sigma must be >= 0")
    if not all(0 <= c <= 255 for c in spec.fabric_rgb):
        raise SpecInvalid("fabric_rgb channels must be bytes")
    for i, path in enumerate(spec.paths):
        if path.thread_width < 3:
            raise SpecInvalid(f"path {i}: thread_width must be >= 3 so the sampling window sees thread")
        margin = (path.thread_width - 1) / 2.0 + 1.0
        geom = path.geometry
        if isinstance(geom, LinearPath):
            points = [geom.p0, geom.p1]
        else:
            reach = geom.circle.radius + margin
            points = [(geom.circle.cx - reach, geom.circle.cy - reach),
                      (geom.circle.cx + reach, geom.circle.cy + reach)]
            margin = 0.0
        for x, y in points:
            if not (margin <= x <= spec.width - 1 - margin
                    and margin <= y <= spec.height - 1 - margin):
                raise SpecInvalid(f"path {i} exceeds the canvas")
        length = geom.length
        spans = sorted(d.span for d in path.injected)
        prev_end = -math.inf
        for a, b in spans:
            if not (0.0 <= a < b <= length):
                raise SpecInvalid(f"path {i}: defect span [{a}, {b}] outside [0, {length:.1f}]")
            if a < prev_end:
                raise SpecInvalid(f"path {i}: defect spans overlap")
            prev_end = b


def _points_along(path: SeamPath, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized (x, y, nx, ny) for arclengths ts along the path."""
    if isinstance(path, LinearPath):
        length = path.length
        ux = (path.p1[0] - path.p0[0]) / length
        uy = (path.p1[1] - path.p0[1]) / length
        xs = path.p0[0] + ts * ux
        ys = path.p0[1] + ts * uy
        nx = np.full_like(ts, math.cos(path.line.theta))
        ny = np.full_like(ts, math.sin(path.line.theta))
        return xs, ys, nx, ny
    phi = path.arc_start + ts / path.circle.radius
    nx = np.cos(phi)
    ny = np.sin(phi)
    return path.circle.cx + path.circle.radius * nx, path.circle.cy + path.circle.radius * ny, nx, ny


def _mask_outside(ts: np.ndarray, spans: list[tuple[float, float]]) -> np.ndarray:
    keep = np.ones(ts.shape, dtype=bool)
    for a, b in spans:
        keep &= ~((ts >= a) & (ts < b))
    return keep


def _mask_inside(ts: np.ndarray, spans: list[tuple[float, float]]) -> np.ndarray:
    return ~_mask_outside(ts, spans)


def _paint(img: np.ndarray, path: SeamPath, ts: np.ndarray, halfwidth: float,
           color: tuple[int, int, int]) -> None:
    if ts.size == 0:
        return
    h, w = img.shape[:2]
    xs, ys, nx, ny = _points_along(path, ts)
    offs = np.arange(-halfwidth, halfwidth + 1e-9, _PAINT_STEP)
    px = np.floor(xs[:, None] + offs[None, :] * nx[:, None] + 0.5).astype(np.int64)
    py = np.floor(ys[:, None] + offs[None, :] * ny[:, None] + 0.5).astype(np.int64)
    ok = (px >= 0) & (px < w) & (py >= 0) & (py < h)
    img[py[ok], px[ok]] = color


def render_scene(spec: SceneSpec) -> tuple[np.ndarray, GroundTruth]:
    """Render a scene to an RGB image and return it with its ground truth.

    Deterministic: the same spec (including rng_seed) renders bit-identically.
    """
    _validate_scene(spec)
    img = np.empty((spec.height, spec.width, 3), dtype=np.uint8)
    img[:, :] = spec.fabric_rgb
    if spec.fabric_noise_sigma > 0:
        noise = gaussian_field(spec.rng_seed, img.size).reshape(img.shape)
        base = img.astype(np.float64) + spec.fabric_noise_sigma * noise
        img = np.clip(np.rint(base), 0, 255).astype(np.uint8)

    for path in spec.paths:
        geom = path.geometry
        rule = path.rule
        halfwidth = (path.thread_width - 1) / 2.0
        needle = ColorClass.NEEDLE_RED
        second = next(iter(rule.required_colors - {needle}))
        missing = [d.span for d in path.injected if d.kind is DefectKind.MISSING_STITCH]
        skipped = [d.span for d in path.injected if d.kind is DefectKind.SKIPPED_STITCH]
        doubled = [d.span for d in path.injected if d.kind is DefectKind.SUPERIMPOSED_SEAM]

        pitch = rule.pitch
        quarter = pitch / 4.0
        n_cells = int(math.floor(geom.length / pitch + 1e-9))
        for k in range(n_cells):
            c = k * pitch
            # conforming block: needle color then second color over the first
            # half of the cell; suppressed inside missing spans, second color
            # also suppressed inside skipped spans
            ts_a = np.arange(c, c + quarter, _PAINT_STEP)
            ts_b = np.arange(c + quarter, c + 2 * quarter, _PAINT_STEP)
            _paint(img, geom, ts_a[_mask_outside(ts_a, missing)], halfwidth, THREAD_RGB[needle])
            keep_b = _mask_outside(ts_b, missing) & _mask_outside(ts_b, skipped)
            _paint(img, geom, ts_b[keep_b], halfwidth, THREAD_RGB[second])
            # superimposed copy at half-pitch offset, only inside its span
            ts_a2 = np.arange(c + 2 * quarter, c + 3 * quarter, _PAINT_STEP)
            ts_b2 = np.arange(c + 3 * quarter, c + 4 * quarter, _PAINT_STEP)
            _paint(img, geom, ts_a2[_mask_inside(ts_a2, doubled)], halfwidth, THREAD_RGB[needle])
            _paint(img, geom, ts_b2[_mask_inside(ts_b2, doubled)], halfwidth, THREAD_RGB[second])

    truth = GroundTruth(paths=tuple(
        TruthPath(geometry=p.geometry, rule=p.rule, defects=p.injected)
        for p in spec.paths))
    return img, truth


# ---------------------------------------------------------------------------
# Evaluation against ground truth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatchedPair:
    reported_index: int
    truth_path_index: int
    truth_defect_index: int
    iou: float


@dataclass(frozen=True)
class EvalResult:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float
    matches: tuple[MatchedPair, ...]

    def to_dict(self) -> dict:
        return {
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "matches": [
                {"reported_index": m.reported_index,
                 "truth_path_index": m.truth_path_index,
                 "truth_defect_index": m.truth_defect_index,
                 "iou": m.iou}
                for m in self.matches
            ],
        }


def _span_iou(a: tuple[float, float], b: tuple[float, float]) -> float:
    inter = max(0.0, min(a[1], b[1]) - max(a[0], b[0]))
    union = (a[1] - a[0]) + (b[1] - b[0]) - inter
    return inter / union if union > 0 else 0.0


def _geometry_matches(reported: SeamPath, truth: SeamPath, *, line_rho_tol: float,
                      line_theta_tol: float, circle_center_tol: float,
                      circle_radius_tol: float) -> bool:
    if isinstance(reported, LinearPath) and isinstance(truth, LinearPath):
        dtheta = abs(reported.line.theta - truth.line.theta)
        if dtheta <= line_theta_tol:
            return abs(reported.line.rho - truth.line.rho) <= line_rho_tol
        if math.pi - dtheta <= line_theta_tol:
            # theta wrapped past 0/pi: same line with rho negated
            return abs(reported.line.rho + truth.line.rho) <= line_rho_tol
        return False
    if isinstance(reported, CircularPath) and isinstance(truth, CircularPath):
        dc = math.hypot(reported.circle.cx - truth.circle.cx,
                        reported.circle.cy - truth.circle.cy)
        dr = abs(reported.circle.radius - truth.circle.radius)
        return dc <= circle_center_tol and dr <= circle_radius_tol
    return False


def evaluate(report: InspectionReport, truth: GroundTruth, iou_min: float = 0.3, *,
             line_rho_tol: float = 4.0, line_theta_tol: float = 4.0 * math.pi / 180.0,
             circle_center_tol: float = 4.0,
             circle_radius_tol: float = 5.0) -> EvalResult:
    """Greedy matching of reported defects to injected ones by span overlap.

    A reported defect matches an injected one when the kinds agree, the
    reported path geometry matches the truth path within the quantization
    tolerances, and the span intersection-over-union reaches ``iou_min``.
    A path has no intrinsic direction, so the reported span is also tried
    reversed against the reported path length.  Unmatched reported defects
    are false positives; unmatched injected ones are false negatives.
    """
    if not 0 < iou_min <= 1:
        raise ValueError("iou_min must be in (0, 1]")
    tolerances = dict(line_rho_tol=line_rho_tol, line_theta_tol=line_theta_tol,
                      circle_center_tol=circle_center_tol,
                      circle_radius_tol=circle_radius_tol)

    candidates: list[tuple[float, int, int, int]] = []
    for ri, defect in enumerate(report.defects):
        if defect.path_index >= len(report.paths):
            continue
        rpath = report.paths[defect.path_index].path
        length = rpath.length
        reversed_span = (length - defect.span[1], length - defect.span[0])
        for pi, tpath in enumerate(truth.paths):
            if not _geometry_matches(rpath, tpath.geometry, **tolerances):
                continue
            for di, injected in enumerate(tpath.defects):
                if injected.kind is not defect.kind:
                    continue
                iou = max(_span_iou(defect.span, injected.span),
                          _span_iou(reversed_span, injected.span))
                if iou >= iou_min:
                    candidates.append((iou, ri, pi, di))

    candidates.sort(key=lambda c: (-c[0], c[1], c[2], c[3]))
    matched_reported: set[int] = set()
    matched_truth: set[tuple[int, int]] = set()
    matches = []
    for iou, ri, pi, di in candidates:
        if ri in matched_reported or (pi, di) in matched_truth:
            continue
        matched_reported.add(ri)
        matched_truth.add((pi, di))
        matches.append(MatchedPair(reported_index=ri, truth_path_index=pi,
                                   truth_defect_index=di, iou=iou))

    tp = len(matches)
    fp = len(report.defects) - tp
    fn = sum(len(p.defects) for p in truth.paths) - tp
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalResult(true_positives=tp, false_positives=fp, false_negatives=fn,
                      precision=precision, recall=recall, f1=f1, matches=tuple(matches))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def linear_path_from_endpoints(p0: tuple[float, float],
                               p1: tuple[float, float]) -> LinearPath:
    """LinearPath through two points, deriving the (rho, theta) normal form."""
    if p0 == p1:
        raise SpecInvalid("linear path endpoints coincide")
    ux = p1[0] - p0[0]
    uy = p1[1] - p0[1]
    theta = math.atan2(ux, -uy) % math.pi  # normal angle of direction (ux, uy)
    rho = p0[0] * math.cos(theta) + p0[1] * math.sin(theta)
    return LinearPath(line=LineParams(rho=rho, theta=theta), p0=p0, p1=p1)


def circular_path(center: tuple[float, float], radius: float,
                  arc: tuple[float, float] | None = None) -> CircularPath:
    if radius <= 0:
        raise SpecInvalid("circle radius must be positive")
    circle = CircleParams(cx=float(center[0]), cy=float(center[1]),
                          radius=float(radius), score=0)
    if arc is None:
        return CircularPath(circle=circle)
    full = math.isclose((arc[1] - arc[0]) % TWO_PI, 0.0, abs_tol=1e-12) and arc[1] > arc[0]
    return CircularPath(circle=circle, arc_start=float(arc[0]), arc_end=float(arc[1]),
                        full_circle=full)


def _geometry_to_dict(geom: SeamPath) -> dict:
    if isinstance(geom, LinearPath):
        return {"kind": "linear", "p0": list(geom.p0), "p1": list(geom.p1)}
    d = {"kind": "circular", "center": [geom.circle.cx, geom.circle.cy],
         "radius": geom.circle.radius}
    if not geom.full_circle:
        d["arc"] = [geom.arc_start, geom.arc_end]
    return d


def _geometry_from_dict(data: dict) -> SeamPath:
    try:
        kind = data["kind"]
        if kind == "linear":
            return linear_path_from_endpoints(tuple(map(float, data["p0"])),
                                              tuple(map(float, data["p1"])))
        if kind == "circular":
            arc = tuple(map(float, data["arc"])) if "arc" in data else None
            return circular_path(tuple(map(float, data["center"])),
                                 float(data["radius"]), arc)
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecInvalid(f"bad geometry entry: {exc}") from exc
    raise SpecInvalid(f"unknown geometry kind {data.get('kind')!r}")


def scene_to_dict(spec: SceneSpec) -> dict:
    return {
        "width": spec.width,
        "height": spec.height,
        "fabric_rgb": list(spec.fabric_rgb),
        "fabric_noise_sigma": spec.fabric_noise_sigma,
        "rng_seed": spec.rng_seed,
        "paths": [
            {
                "geometry": _geometry_to_dict(p.geometry),
                "rule": rule_to_dict(p.rule),
                "thread_width": p.thread_width,
                "defects": [{"kind": d.kind.value, "span": list(d.span)} for d in p.injected],
            }
            for p in spec.paths
        ],
    }


def _injected_from_dict(data: dict) -> InjectedDefect:
    try:
        kind = DefectKind(data["kind"])
        a, b = map(float, data["span"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecInvalid(f"bad defect entry: {exc}") from exc
    return InjectedDefect(kind=kind, span=(a, b))


def scene_from_dict(data: dict) -> SceneSpec:
    try:
        paths = []
        for entry in data.get("paths", []):
            paths.append(ScenePath(
                geometry=_geometry_from_dict(entry["geometry"]),
                rule=rule_from_dict(entry["rule"]),
                thread_width=int(entry.get("thread_width", 9)),
                injected=tuple(_injected_from_dict(d) for d in entry.get("defects", [])),
            ))
        spec = SceneSpec(
            width=int(data["width"]),
            height=int(data["height"]),
            fabric_rgb=tuple(int(c) for c in data.get("fabric_rgb", DEFAULT_FABRIC_RGB)),
            fabric_noise_sigma=float(data.get("fabric_noise_sigma", 0.0)),
            paths=tuple(paths),
            rng_seed=int(data.get("rng_seed", 0)),
        )
    except SpecInvalid:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecInvalid(f"bad scene spec: {exc}") from exc
    _validate_scene(spec)
    return spec


def truth_to_dict(truth: GroundTruth) -> dict:
    return {
        "schema_version": "1",
        "paths": [
            {
                "geometry": _geometry_to_dict(p.geometry),
                "rule": rule_to_dict(p.rule),
                "defects": [{"kind": d.kind.value, "span": list(d.span)} for d in p.defects],
            }
            for p in truth.paths
        ],
    }


def truth_from_dict(data: dict) -> GroundTruth:
    try:
        paths = tuple(
            TruthPath(geometry=_geometry_from_dict(entry["geometry"]),
                      rule=rule_from_dict(entry["rule"]),
                      defects=tuple(_injected_from_dict(d) for d in entry.get("defects", [])))
            for entry in data["paths"])
    except SpecInvalid:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecInvalid(f"bad ground truth: {exc}") from exc
    return GroundTruth(paths=paths)
