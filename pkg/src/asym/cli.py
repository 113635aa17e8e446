"""Command line entry point: ``asym <command> ...``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import imaging
from .errors import AsymError
from .pipeline import (
    RunConfig,
    run_analyze,
    run_correlate,
    run_keyframes,
    run_measure2,
    run_train_model,
)
from .pts import read_pts

EXIT_OK, EXIT_FRAME_ERRORS, EXIT_FAILURE = 0, 1, 2


def _report_errors(errors) -> None:
    for err in errors:
        print(f"frame {err.frame}: {err.message}", file=sys.stderr)


def _fmt_corr(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.6f}"


def _config(args) -> RunConfig:
    return RunConfig(
        input_dir=Path(args.input),
        out_dir=Path(args.out) if getattr(args, "out", None) else Path("."),
        scheme_path=Path(args.scheme) if getattr(args, "scheme", None) else None,
        neutral_index=getattr(args, "neutral", None),
        tolerance=getattr(args, "tolerance", 0.0),
        jobs=getattr(args, "jobs", None) or os.cpu_count() or 1,
        normalize_brightness=not getattr(args, "no_brightness_normalize", False),
    )


def cmd_analyze(args) -> int:
    result = run_analyze(_config(args))
    for name, value in result.correlations.items():
        a, b = name.split("~")
        print(f"pearson({a}, {b}) = {_fmt_corr(value)}")
    _report_errors(result.errors)
    return EXIT_FRAME_ERRORS if result.errors else EXIT_OK


def cmd_measure2(args) -> int:
    result = run_measure2(_config(args))
    _report_errors(result.errors)
    return EXIT_FRAME_ERRORS if result.errors else EXIT_OK


def cmd_keyframes(args) -> int:
    selected = run_keyframes(_config(args))
    text = "".join(f"{i}\n" for i in selected)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_fit_error(args) -> int:
    print(imaging.l1_norm(imaging.read_pnm(args.image_a), imaging.read_pnm(args.image_b)))
    return EXIT_OK


def cmd_colorfix(args) -> int:
    fitted, original = imaging.read_pnm(args.fitted), imaging.read_pnm(args.original)
    if not isinstance(fitted, imaging.RgbImage) or not isinstance(original, imaging.RgbImage):
        raise AsymError("colour correction needs two PPM (colour) images")
    imaging.write_pnm(imaging.color_correct(fitted, original), args.out)
    return EXIT_OK


def cmd_homography(args) -> int:
    src, dst = read_pts(args.src_pts), read_pts(args.dst_pts)
    h = imaging.estimate_homography(src.points, dst.points)
    if args.invert:
        h = imaging.invert_homography(h)
    for row in h.matrix:
        print(" ".join(f"{v:.17g}" for v in row))
    if args.input:
        if not args.out:
            raise AsymError("--out is required when --in is given")
        imaging.write_pnm(imaging.warp_perspective(imaging.read_pnm(args.input), h), args.out)
    return EXIT_OK


def cmd_correlate(args) -> int:
    print(f"{run_correlate(args.input, args.column_a, args.column_b):.6f}")
    return EXIT_OK


def cmd_train_model(args) -> int:
    model = run_train_model(args.input, args.p, args.out, clamp_k=args.k)
    print(f"retained {model.n_modes} modes of {2 * model.n_points}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asym", description="Frame-by-frame bilateral asymmetry measures")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def jobs(p):
        p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")

    p = sub.add_parser("analyze", help="shape asymmetry and movement from .pts frames")
    p.add_argument("--in", dest="input", required=True, help="directory of numbered .pts files")
    p.add_argument("--out", required=True, help="output directory for metrics.csv and charts")
    p.add_argument("--scheme", help="landmark scheme JSON (default: median split, index order)")
    p.add_argument("--neutral", type=int, default=None, help="neutral frame index (default: first frame)")
    jobs(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("measure2", help="pixel asymmetry from frames and .pts files")
    p.add_argument("--in", dest="input", required=True, help="directory of numbered .pts and PGM/PPM files")
    p.add_argument("--out", required=True, help="output directory for measure2.csv")
    p.add_argument("--scheme", help="landmark scheme JSON")
    p.add_argument("--no-brightness-normalize", action="store_true",
                   help="skip matching the mirrored half's mean brightness")
    jobs(p)
    p.set_defaults(func=cmd_measure2)

    p = sub.add_parser("keyframes", help="select frames by the tolerance scan")
    p.add_argument("--in", dest="input", required=True, help="directory of numbered PGM/PPM frames")
    p.add_argument("--tolerance", type=float, required=True)
    p.add_argument("--out", help="write indices here instead of stdout")
    p.set_defaults(func=cmd_keyframes)

    p = sub.add_parser("fit-error", help="L1 distance between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.set_defaults(func=cmd_fit_error)

    p = sub.add_parser("colorfix", help="match a fitted frame's channel means to the original")
    p.add_argument("fitted")
    p.add_argument("original")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_colorfix)

    p = sub.add_parser("homography", help="fit a homography from point files and optionally warp an image")
    p.add_argument("--src-pts", required=True)
    p.add_argument("--dst-pts", required=True)
    p.add_argument("--in", dest="input", help="image to warp")
    p.add_argument("--out", help="warped image path")
    p.add_argument("--invert", action="store_true", help="use the inverse homography")
    p.set_defaults(func=cmd_homography)

    p = sub.add_parser("correlate", help="Pearson coefficient of two CSV columns")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("column_a")
    p.add_argument("column_b")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("train-model", help="train a point distribution model from .pts files")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--p", type=float, default=0.98, help="proportion of variance to keep")
    p.add_argument("--k", type=float, default=3.0, help="parameter clamp in standard deviations")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_model)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (AsymError, OSError) as exc:
        print(f"asym {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
