"""On-disk report schema and canonical JSON serialization.

Report documents serialize to canonical JSON -- sorted keys, compact
separators, floats reduced to 6 significant digits -- so identical
inspections produce byte-identical files and golden tests can compare bytes.
Float canonicalization happens when the document is built; serializing and
parsing a document is lossless from then on.
"""

from __future__ import annotations

import json
from typing import Any

from .config import rule_from_dict, rule_to_dict
from .errors import MalformedFile
from .hough import CircleParams, CircularPath, LinearPath, LineParams, SeamPath
from .inspection import Defect, DefectKind, InspectionReport, PathReport, Verdict

SCHEMA_VERSION = "1"


def canonical_value(value: Any) -> Any:
    """Recursively normalize floats to 6 significant digits."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return float(f"{value:.6g}")
    if isinstance(value, dict):
        return {k: canonical_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [canonical_value(v) for v in value]
    raise TypeError(f"cannot canonicalize {type(value).__name__}")


def _path_geometry_to_dict(path: SeamPath) -> dict:
    if isinstance(path, LinearPath):
        return {"kind": "linear", "rho": path.line.rho, "theta": path.line.theta,
                "p0": list(path.p0), "p1": list(path.p1)}
    return {"kind": "circular", "cx": path.circle.cx, "cy": path.circle.cy,
            "radius": path.circle.radius, "arc_start": path.arc_start,
            "arc_end": path.arc_end, "full_circle": path.full_circle}


def _path_geometry_from_dict(data: dict) -> SeamPath:
    kind = data.get("kind")
    if kind == "linear":
        line = LineParams(rho=float(data["rho"]), theta=float(data["theta"]))
        return LinearPath(line=line, p0=tuple(map(float, data["p0"])),
                          p1=tuple(map(float, data["p1"])))
    if kind == "circular":
        circle = CircleParams(cx=float(data["cx"]), cy=float(data["cy"]),
                              radius=float(data["radius"]), score=0)
        return CircularPath(circle=circle, arc_start=float(data["arc_start"]),
                            arc_end=float(data["arc_end"]),
                            full_circle=bool(data["full_circle"]))
    raise MalformedFile(f"unknown path geometry kind {kind!r}")


def build_document(report: InspectionReport,
                   timings_ms: dict[str, float] | None = None) -> dict:
    """Canonical report document for an inspection.

    Stage timings are included only on request: they vary run to run, and the
    default document must be byte-identical for identical inputs.
    """
    doc = {
        "schema_version": SCHEMA_VERSION,
        "image_id": report.image_id,
        "verdict": report.verdict.value,
        "paths": [
            {"geometry": _path_geometry_to_dict(p.path),
             "rule": rule_to_dict(p.rule),
             "score": p.score}
            for p in report.paths
        ],
        "defects": [
            {"kind": d.kind.value, "path_index": d.path_index,
             "span": list(d.span), "bbox": list(d.bbox), "detail": d.detail}
            for d in report.defects
        ],
        "diagnostics": list(report.diagnostics),
        "notes": list(report.notes),
        "params": report.params,
        "timings_ms": dict(timings_ms) if timings_ms is not None else None,
    }
    return canonical_value(doc)


def serialize_document(doc: dict) -> bytes:
    """Canonical JSON bytes: sorted keys, compact separators, trailing newline."""
    doc = canonical_value(doc)
    return (json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
            + "\n").encode("ascii")


def parse_document(data: bytes) -> dict:
    """Parse and structurally validate a report document."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"bad report JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedFile("report root must be an object")
    missing = {"schema_version", "image_id", "verdict", "paths", "defects",
               "diagnostics", "notes", "params"} - set(doc)
    if missing:
        raise MalformedFile(f"report missing keys: {sorted(missing)}")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise MalformedFile(f"unsupported report schema_version {doc['schema_version']!r}")
    return doc


def document_to_report(doc: dict) -> InspectionReport:
    """Rebuild an InspectionReport from a parsed document (for evaluation)."""
    try:
        paths = tuple(
            PathReport(path=_path_geometry_from_dict(entry["geometry"]),
                       rule=rule_from_dict(entry["rule"]),
                       score=int(entry["score"]))
            for entry in doc["paths"])
        defects = tuple(
            Defect(kind=DefectKind(entry["kind"]),
                   span=tuple(map(float, entry["span"])),
                   bbox=tuple(int(v) for v in entry["bbox"]),
                   detail=str(entry["detail"]),
                   path_index=int(entry["path_index"]))
            for entry in doc["defects"])
        return InspectionReport(
            image_id=str(doc["image_id"]),
            paths=paths,
            defects=defects,
            verdict=Verdict(doc["verdict"]),
            diagnostics=tuple(doc["diagnostics"]),
            notes=tuple(doc["notes"]),
            params=doc["params"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"bad report document: {exc}") from exc
