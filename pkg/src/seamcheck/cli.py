"""Command-line front end.

    seamcheck inspect <img>... [--config F] [--out DIR] [--annotate DIR]
                               [--dump-accumulator] [--timings]
    seamcheck generate <spec.json> --out <prefix> [--png]
    seamcheck evaluate <report.json> <truth.json> [--iou 0.3]

Exit codes: 0 success (inspect: every verdict pass; evaluate: f1 == 1.0),
1 inspection fail / imperfect score, 2 usage, I/O, or configuration error.
When more than one image is inspected, reports go to files under --out so
stdout never interleaves.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import InspectionConfig, default_config, load_config
from .errors import SeamcheckError
from .hough import accumulator_image
from .imagekit import decode_image, encode_image, encode_pgm, encode_png
from .inspection import Verdict, annotate, run_pipeline
from .report import (build_document, document_to_report, parse_document,
                     serialize_document)
from .synthgen import (evaluate, render_scene, scene_from_dict, truth_from_dict,
                       truth_to_dict)

CONFIG_ENV_VAR = "SEAMCHECK_CONFIG"


def _resolve_config(config_arg: str | None) -> InspectionConfig:
    if config_arg is not None:
        return load_config(config_arg)
    env = os.environ.get(CONFIG_ENV_VAR)
    if env:
        return load_config(env)
    return default_config()


def _cmd_inspect(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args.config)
    if len(args.images) > 1 and args.out is None:
        print("error: --out is required when inspecting multiple images", file=sys.stderr)
        return 2
    out_dir = Path(args.out) if args.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    annotate_dir = Path(args.annotate) if args.annotate else None
    if annotate_dir is not None:
        annotate_dir.mkdir(parents=True, exist_ok=True)

    any_fail = False
    for image_path in args.images:
        path = Path(image_path)
        img = decode_image(path.read_bytes())
        result = run_pipeline(img, cfg, image_id=path.name)
        doc = build_document(result.report,
                             timings_ms=result.timings_ms if args.timings else None)
        payload = serialize_document(doc)
        if out_dir is not None:
            (out_dir / f"{path.stem}.report.json").write_bytes(payload)
        else:
            sys.stdout.write(payload.decode("ascii"))
        if annotate_dir is not None:
            annotated = annotate(img, result.report)
            (annotate_dir / f"{path.stem}.annotated.ppm").write_bytes(encode_image(annotated))
        if args.dump_accumulator and result.line_accumulator is not None:
            pgm = encode_pgm(accumulator_image(result.line_accumulator))
            target_dir = out_dir if out_dir is not None else Path.cwd()
            (target_dir / f"{path.stem}.accumulator.pgm").write_bytes(pgm)
        if result.report.verdict is Verdict.FAIL:
            any_fail = True
    return 1 if any_fail else 0


def _cmd_generate(args: argparse.Namespace) -> int:
    raw = Path(args.spec).read_bytes()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        print(f"error: bad scene spec JSON: {exc}", file=sys.stderr)
        return 2
    spec = scene_from_dict(data)
    img, truth = render_scene(spec)
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    if args.png:
        image_path = prefix.with_name(prefix.name + ".png")
        image_path.write_bytes(encode_png(img))
    else:
        image_path = prefix.with_name(prefix.name + ".ppm")
        image_path.write_bytes(encode_image(img))
    truth_path = prefix.with_name(prefix.name + ".truth.json")
    truth_path.write_bytes(serialize_document(truth_to_dict(truth)))
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    report = document_to_report(parse_document(Path(args.report).read_bytes()))
    try:
        truth_data = json.loads(Path(args.truth).read_bytes())
    except json.JSONDecodeError as exc:
        print(f"error: bad ground truth JSON: {exc}", file=sys.stderr)
        return 2
    truth = truth_from_dict(truth_data)
    result = evaluate(report, truth, iou_min=args.iou)
    sys.stdout.write(serialize_document(result.to_dict()).decode("ascii"))
    return 0 if result.f1 == 1.0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seamcheck",
                                     description="Seam defect inspection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_inspect = sub.add_parser("inspect", help="inspect seam images")
    p_inspect.add_argument("images", nargs="+", metavar="IMG",
                           help="input image(s), PPM or PNG")
    p_inspect.add_argument("--config", help=f"config file (JSON or TOML); falls back to "
                                            f"${CONFIG_ENV_VAR}, then built-in defaults")
    p_inspect.add_argument("--out", help="directory for report files (required for >1 image)")
    p_inspect.add_argument("--annotate", help="directory for annotated images")
    p_inspect.add_argument("--dump-accumulator", action="store_true",
                           help="write the line accumulator as a PGM graymap")
    p_inspect.add_argument("--timings", action="store_true",
                           help="include per-stage timings in the report "
                                "(makes report bytes run-dependent)")
    p_inspect.set_defaults(func=_cmd_inspect)

    p_generate = sub.add_parser("generate", help="render a synthetic seam scene")
    p_generate.add_argument("spec", help="scene specification JSON")
    p_generate.add_argument("--out", required=True, metavar="PREFIX",
                            help="output prefix for <prefix>.ppm and <prefix>.truth.json")
    p_generate.add_argument("--png", action="store_true", help="write PNG instead of PPM")
    p_generate.set_defaults(func=_cmd_generate)

    p_evaluate = sub.add_parser("evaluate", help="score a report against ground truth")
    p_evaluate.add_argument("report", help="inspection report JSON")
    p_evaluate.add_argument("truth", help="ground truth JSON")
    p_evaluate.add_argument("--iou", type=float, default=0.3,
                            help="minimum span intersection-over-union for a match")
    p_evaluate.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else int(exc.code or 0)
    try:
        return args.func(args)
    except SeamcheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
