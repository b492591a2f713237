"""Inspection configuration: thread-color taxonomy, stitch rules, pipeline knobs.

Configuration files are JSON or TOML (selected by extension).  Every knob has
a shipped default; files only need to override what differs.  Validation is
strict: unknown keys and overlapping color bands are rejected at load time,
not during inspection.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .binarization import Polarity
from .errors import ConfigError, OverlappingBands


class ColorClass(Enum):
    NEEDLE_RED = "needle_red"
    BOBBIN_GREEN = "bobbin_green"
    LOOPER_ORANGE = "looper_orange"
    BACKGROUND = "background"


class StitchType(Enum):
    LOCKSTITCH_301 = "lockstitch_301"
    CHAINSTITCH_401 = "chainstitch_401"


# Thread roles per stitch type: lockstitch = red needle + green bobbin;
# two-thread chainstitch = red needle + orange looper.
REQUIRED_COLORS: dict[StitchType, frozenset[ColorClass]] = {
    StitchType.LOCKSTITCH_301: frozenset({ColorClass.NEEDLE_RED, ColorClass.BOBBIN_GREEN}),
    StitchType.CHAINSTITCH_401: frozenset({ColorClass.NEEDLE_RED, ColorClass.LOOPER_ORANGE}),
}


class GeometryMode(Enum):
    LINES = "lines"
    CIRCLES = "circles"
    BOTH = "both"


@dataclass(frozen=True)
class ColorBand:
    """HSV decision region for one thread color.

    The hue interval is closed and may wrap past 360 (hue_lo > hue_hi); a
    pixel belongs to the band when its hue falls in the interval and both
    s >= s_min and v >= v_min hold.
    """

    color: ColorClass
    hue_lo: float
    hue_hi: float
    s_min: float = 0.25
    v_min: float = 0.15

    def __post_init__(self):
        if self.color is ColorClass.BACKGROUND:
            raise ConfigError("BACKGROUND is the absence of a band, not a band")
        if not (0.0 <= self.hue_lo < 360.0 and 0.0 <= self.hue_hi < 360.0):
            raise ConfigError(f"hue bounds must lie in [0, 360): {self.hue_lo}, {self.hue_hi}")
        if not 0.0 < self.s_min <= 1.0:
            raise ConfigError("s_min must be in (0, 1]")
        if not 0.0 <= self.v_min <= 1.0:
            raise ConfigError("v_min must be in [0, 1]")

    def hue_contains(self, h: float) -> bool:
        if self.hue_lo <= self.hue_hi:
            return self.hue_lo <= h <= self.hue_hi
        return h >= self.hue_lo or h <= self.hue_hi

    def contains(self, h: float, s: float, v: float) -> bool:
        return s >= self.s_min and v >= self.v_min and self.hue_contains(h)


def _hue_intervals_overlap(a: ColorBand, b: ColorBand) -> bool:
    return (a.hue_contains(b.hue_lo) or a.hue_contains(b.hue_hi)
            or b.hue_contains(a.hue_lo) or b.hue_contains(a.hue_hi))


def validate_bands(bands: tuple[ColorBand, ...]) -> None:
    """Reject overlapping bands; saturation/value floors cannot separate
    bands so disjointness must come from the hue intervals."""
    for i, a in enumerate(bands):
        for b in bands[i + 1:]:
            if a.color is b.color:
                raise OverlappingBands(f"duplicate band for {a.color.value}")
            if _hue_intervals_overlap(a, b):
                raise OverlappingBands(
                    f"bands {a.color.value} [{a.hue_lo}, {a.hue_hi}] and "
                    f"{b.color.value} [{b.hue_lo}, {b.hue_hi}] overlap in hue")


@dataclass(frozen=True)
class StitchRule:
    """Stitch conformity parameters for one seam.

    pitch: nominal stitch spacing in pixels along the path.
    max_gap_stitches: background runs longer than max_gap_stitches * pitch
        are missing stitches.
    coverage_max: thread coverage above nominal_coverage * coverage_max marks
        a superimposed seam.
    """

    stitch_type: StitchType
    pitch: float = 16.0
    max_gap_stitches: float = 1.5
    coverage_max: float = 1.5

    def __post_init__(self):
        if self.pitch <= 0:
            raise ConfigError("pitch must be positive")
        if self.max_gap_stitches < 1.0:
            raise ConfigError("max_gap_stitches must be >= 1")
        if self.coverage_max <= 1.0:
            raise ConfigError("coverage_max must be > 1")

    @property
    def required_colors(self) -> frozenset[ColorClass]:
        return REQUIRED_COLORS[self.stitch_type]


@dataclass(frozen=True)
class HoughSettings:
    """Quantization and peak-extraction knobs for path recognition."""

    theta_step: float = math.pi / 180.0
    rho_step: float = 1.0
    vote_threshold: int = 55
    nms_radius: int = 2
    max_lines: int | None = None
    r_min: float = 10.0
    r_max: float = 60.0
    r_step: float = 1.0
    circle_vote_fraction: float = 0.8
    max_circles: int | None = None

    def __post_init__(self):
        if self.theta_step <= 0 or self.rho_step <= 0:
            raise ConfigError("theta_step and rho_step must be positive")
        if self.vote_threshold < 1:
            raise ConfigError("vote_threshold must be >= 1")
        if not 0 < self.r_min <= self.r_max:
            raise ConfigError("need 0 < r_min <= r_max")
        if self.r_step <= 0:
            raise ConfigError("r_step must be positive")
        if not 0 < self.circle_vote_fraction <= 1:
            raise ConfigError("circle_vote_fraction must be in (0, 1]")


DEFAULT_BANDS: tuple[ColorBand, ...] = (
    ColorBand(ColorClass.NEEDLE_RED, hue_lo=345.0, hue_hi=15.0),
    ColorBand(ColorClass.LOOPER_ORANGE, hue_lo=16.0, hue_hi=45.0),
    ColorBand(ColorClass.BOBBIN_GREEN, hue_lo=90.0, hue_hi=150.0),
)


@dataclass(frozen=True)
class InspectionConfig:
    """Full pipeline configuration; a snapshot of this goes in every report."""

    bands: tuple[ColorBand, ...] = DEFAULT_BANDS
    line_rule: StitchRule = field(default_factory=lambda: StitchRule(StitchType.LOCKSTITCH_301))
    circle_rule: StitchRule = field(default_factory=lambda: StitchRule(StitchType.LOCKSTITCH_301))
    geometry: GeometryMode = GeometryMode.LINES
    polarity: Polarity = Polarity.DARK_FOREGROUND
    smooth_sigma: float = 1.0
    smooth_radius: int = 2
    hough: HoughSettings = field(default_factory=HoughSettings)
    sample_step: float = 1.0
    nominal_coverage: float = 0.5
    min_consecutive: int = 1
    gap_tolerance: float = 5.0

    def __post_init__(self):
        validate_bands(self.bands)
        if self.smooth_sigma <= 0 or self.smooth_radius < 1:
            raise ConfigError("smoothing needs sigma > 0 and radius >= 1")
        if self.sample_step <= 0:
            raise ConfigError("sample_step must be positive")
        if not 0 < self.nominal_coverage <= 1:
            raise ConfigError("nominal_coverage must be in (0, 1]")
        if self.min_consecutive < 1:
            raise ConfigError("min_consecutive must be >= 1")

    def to_dict(self) -> dict:
        return {
            "bands": [
                {"color": b.color.value, "hue_lo": b.hue_lo, "hue_hi": b.hue_hi,
                 "s_min": b.s_min, "v_min": b.v_min}
                for b in self.bands
            ],
            "line_rule": rule_to_dict(self.line_rule),
            "circle_rule": rule_to_dict(self.circle_rule),
            "geometry": self.geometry.value,
            "polarity": self.polarity.value,
            "smooth_sigma": self.smooth_sigma,
            "smooth_radius": self.smooth_radius,
            "hough": {
                "theta_step": self.hough.theta_step,
                "rho_step": self.hough.rho_step,
                "vote_threshold": self.hough.vote_threshold,
                "nms_radius": self.hough.nms_radius,
                "max_lines": self.hough.max_lines,
                "r_min": self.hough.r_min,
                "r_max": self.hough.r_max,
                "r_step": self.hough.r_step,
                "circle_vote_fraction": self.hough.circle_vote_fraction,
                "max_circles": self.hough.max_circles,
            },
            "sample_step": self.sample_step,
            "nominal_coverage": self.nominal_coverage,
            "min_consecutive": self.min_consecutive,
            "gap_tolerance": self.gap_tolerance,
        }


def rule_to_dict(rule: StitchRule) -> dict:
    return {"stitch_type": rule.stitch_type.value, "pitch": rule.pitch,
            "max_gap_stitches": rule.max_gap_stitches, "coverage_max": rule.coverage_max}


def rule_from_dict(data: dict) -> StitchRule:
    known = {"stitch_type", "pitch", "max_gap_stitches", "coverage_max"}
    _reject_unknown(data, known, "rule")
    try:
        stitch_type = StitchType(data["stitch_type"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad stitch_type in rule: {data.get('stitch_type')!r}") from exc
    kwargs = {k: data[k] for k in ("pitch", "max_gap_stitches", "coverage_max") if k in data}
    return StitchRule(stitch_type=stitch_type, **kwargs)


def _reject_unknown(data: dict, known: set[str], where: str) -> None:
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def config_from_dict(data: dict) -> InspectionConfig:
    """Build a config from parsed JSON/TOML, overlaying the defaults."""
    known = {"bands", "line_rule", "circle_rule", "geometry", "polarity",
             "smooth_sigma", "smooth_radius", "hough", "sample_step",
             "nominal_coverage", "min_consecutive", "gap_tolerance"}
    _reject_unknown(data, known, "config")
    kwargs: dict = {}
    if "bands" in data:
        bands = []
        for entry in data["bands"]:
            _reject_unknown(entry, {"color", "hue_lo", "hue_hi", "s_min", "v_min"}, "band")
            try:
                color = ColorClass(entry["color"])
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad band color: {entry.get('color')!r}") from exc
            bands.append(ColorBand(color=color,
                                   hue_lo=float(entry["hue_lo"]), hue_hi=float(entry["hue_hi"]),
                                   s_min=float(entry.get("s_min", 0.25)),
                                   v_min=float(entry.get("v_min", 0.15))))
        kwargs["bands"] = tuple(bands)
    if "line_rule" in data:
        kwargs["line_rule"] = rule_from_dict(data["line_rule"])
    if "circle_rule" in data:
        kwargs["circle_rule"] = rule_from_dict(data["circle_rule"])
    if "geometry" in data:
        try:
            kwargs["geometry"] = GeometryMode(data["geometry"])
        except ValueError as exc:
            raise ConfigError(f"bad geometry mode: {data['geometry']!r}") from exc
    if "polarity" in data:
        try:
            kwargs["polarity"] = Polarity(data["polarity"])
        except ValueError as exc:
            raise ConfigError(f"bad polarity: {data['polarity']!r}") from exc
    if "hough" in data:
        hough_known = {"theta_step", "rho_step", "vote_threshold", "nms_radius",
                       "max_lines", "r_min", "r_max", "r_step",
                       "circle_vote_fraction", "max_circles"}
        _reject_unknown(data["hough"], hough_known, "hough")
        kwargs["hough"] = HoughSettings(**data["hough"])
    for key in ("smooth_sigma", "smooth_radius", "sample_step", "nominal_coverage",
                "min_consecutive", "gap_tolerance"):
        if key in data:
            kwargs[key] = data[key]
    try:
        return InspectionConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> InspectionConfig:
    """Load a JSON or TOML configuration file (format chosen by extension)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix.lower() == ".toml":
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
            raise ConfigError(f"bad TOML in {path}: {exc}") from exc
    else:
        try:
            data = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ConfigError(f"bad JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a table/object: {path}")
    return config_from_dict(data)


def default_config() -> InspectionConfig:
    return InspectionConfig()
