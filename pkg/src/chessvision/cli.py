"""Command line interface.

    chessvision digitize <image> [--config F] [--probs F] [--cache F]
    chessvision watch <dir> [--period S] [--follow] [--config F]
    chessvision bench intersections --sizes 8,32,128 --trials 5

Exit codes: 0 success, 2 board detection failure, 3 classification
failure, 4 bad input or configuration.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from .board import UNIT_CORNERS, BoardLocation, DetectionError
from .classify import ClassificationError
from .geometry import Point2, homography_from_quad
from .imageio import read_image
from .pipeline import (
    ConfigError,
    PipelineConfig,
    bench_intersections,
    digitize,
    watch,
)

EXIT_OK = 0
EXIT_DETECTION = 2
EXIT_CLASSIFICATION = 3
EXIT_BAD_INPUT = 4


def _load_config(path: Optional[str]) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return PipelineConfig.from_file(path)


def read_location_file(path) -> BoardLocation:
    """Parse a cached-location file: 8 reals (4 corner pairs) on one line."""
    values = Path(path).read_text().split()
    if len(values) != 8:
        raise ValueError(f"{path}: expected 8 coordinates, got {len(values)}")
    coords = [float(v) for v in values]
    corners = [Point2(coords[i], coords[i + 1]) for i in range(0, 8, 2)]
    return BoardLocation(corners, homography_from_quad(corners, list(UNIT_CORNERS)))


def write_location_file(path, loc: BoardLocation) -> None:
    line = " ".join(f"{p.x:.8f} {p.y:.8f}" for p in loc.corners)
    Path(path).write_text(line + "\n")


def _cmd_digitize(args) -> int:
    config = _load_config(args.config)
    if args.probs:
        config = replace(config, backend="file", probability_file=args.probs)
    image = read_image(args.image)
    cached = None
    if args.cache and Path(args.cache).exists():
        cached = read_location_file(args.cache)
    result = digitize(image, config, cached_location=cached)
    if args.cache:
        write_location_file(args.cache, result.location)
    print(result.to_line())
    return EXIT_OK


def _cmd_watch(args) -> int:
    config = _load_config(args.config)
    if args.period is not None:
        config = replace(config, period_s=args.period)
    if not Path(args.directory).is_dir():
        raise ValueError(f"not a directory: {args.directory}")
    for record in watch(
        args.directory, config, follow=args.follow, max_polls=args.max_polls
    ):
        print(record.to_line(), flush=True)
    return EXIT_OK


def _cmd_bench(args) -> int:
    if args.what != "intersections":
        raise ValueError(f"unknown benchmark {args.what!r}")
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError as exc:
        raise ValueError(f"bad --sizes: {exc}") from exc
    report = bench_intersections(sizes, args.trials)
    print(report.text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chessvision",
        description="Digitize a physical chessboard image into a FEN placement string.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("digitize", help="one image -> FEN")
    p.add_argument("image")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--probs", help="64x13 probability vector file (file backend)")
    p.add_argument("--cache", help="board-location cache file (read and updated)")
    p.set_defaults(func=_cmd_digitize)

    p = sub.add_parser("watch", help="digitize images from a directory in order")
    p.add_argument("directory")
    p.add_argument("--period", type=float, help="sampling period in seconds")
    p.add_argument("--follow", action="store_true",
                   help="keep polling for new images instead of a single pass")
    p.add_argument("--max-polls", type=int, help="stop after this many scans")
    p.add_argument("--config", help="key = value configuration file")
    p.set_defaults(func=_cmd_watch)

    p = sub.add_parser("bench", help="performance benchmarks")
    p.add_argument("what", choices=["intersections"])
    p.add_argument("--sizes", default="8,16,32,64,128,256,512",
                   help="comma-separated segment counts")
    p.add_argument("--trials", type=int, default=5)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DetectionError as exc:
        print(f"error: board detection failed: {exc}", file=sys.stderr)
        return EXIT_DETECTION
    except ClassificationError as exc:
        print(f"error: classification failed: {exc}", file=sys.stderr)
        return EXIT_CLASSIFICATION
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
