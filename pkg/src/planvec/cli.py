"""Command-line entry point: rasterize, vectorize, reconstruct, heatmaps,
evaluate, and the combined pipeline.

Exit codes: 0 success, 2 missing input, 3 parse failure, 4 shape mismatch,
5 configuration error, 1 anything else.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import heatmap as hm
from . import metrics as mt
from . import reconstruct3d as r3
from . import svg_annotations as svg
from . import vectorize as vz
from .config import PipelineConfig, effective_threads, read_keyvalues_file, write_keyvalues
from .errors import (
    ConfigError,
    DimensionMismatch,
    MalformedDocument,
    PlanvecError,
    UnparseableGeometry,
)
from .mask_io import Class, palette_with_colors, read_mask, write_mask

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_MISSING_INPUT = 2
EXIT_PARSE = 3
EXIT_SHAPE = 4
EXIT_CONFIG = 5


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _require_file(path: str) -> None:
    if not os.path.isfile(path):
        raise FileNotFoundError(path)


def cmd_rasterize(args: argparse.Namespace) -> int:
    _require_file(args.svg)
    kind_map = svg.load_kind_map(args.mapping) if args.mapping else None
    with open(args.svg, encoding="utf-8") as fh:
        parsed = svg.parse_annotation(fh.read(), kind_map)
    mask = svg.rasterize_annotations(parsed.shapes, args.width, args.height)
    write_mask(args.out, mask, color=not args.ids)
    print(f"wrote {args.out}: {len(parsed.shapes)} shapes, {parsed.skipped} skipped")
    return EXIT_OK


def cmd_vectorize(args: argparse.Namespace) -> int:
    _require_file(args.mask)
    mask = read_mask(args.mask)
    thresholds = vz.Thresholds(args.eps_u, args.eps_d, args.eps_a)
    polygons = vz.vectorize_mask(mask, thresholds)
    if args.format == "geojson":
        vz.write_geojson(args.out, polygons)
    else:
        vz.write_polygons(args.out, polygons)
    print(f"wrote {args.out}: {len(polygons)} polygons")
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace) -> int:
    _require_file(args.polygons)
    polygons = vz.read_polygons(args.polygons)
    profile = r3.load_profile(args.profile) if args.profile else r3.HeightProfile()
    if args.pixel_scale is not None:
        profile = r3.HeightProfile(profile.spans, args.pixel_scale)
    mesh = r3.extrude(polygons, profile, strict=args.strict)
    r3.write_obj(args.out, mesh)
    print(f"wrote {args.out}: {len(mesh.vertices)} vertices, {len(mesh.faces)} faces")
    return EXIT_OK


def cmd_heatmaps(args: argparse.Namespace) -> int:
    _require_file(args.mask)
    betas = tuple(float(b) for b in args.betas.split(","))
    mask = read_mask(args.mask)
    maps = hm.opening_heatmaps(mask, betas)
    os.makedirs(args.out_dir, exist_ok=True)

    def write_one(item: tuple[Class, np.ndarray]) -> str:
        cls, values = item
        path = os.path.join(args.out_dir, f"{cls.name.lower()}.png")
        hm.write_heatmap(path, values, betas)
        return path

    with ThreadPoolExecutor(max_workers=effective_threads(args.threads)) as pool:
        for path in pool.map(write_one, sorted(maps.items())):
            print(f"wrote {path}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    _require_file(args.pred)
    _require_file(args.truth)
    pred = read_mask(args.pred)
    truth = read_mask(args.truth)
    merges = [mt.parse_merge_spec(s) for s in args.merge or []]
    rep = mt.report(mt.confusion(pred, truth), merges)
    sys.stdout.write(mt.format_table(rep))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(mt.to_keyvalues(rep))
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    _require_file(args.mask)
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    if args.eps_u is not None or args.eps_d is not None or args.eps_a is not None:
        config.thresholds = vz.Thresholds(
            args.eps_u if args.eps_u is not None else config.thresholds.eps_u,
            args.eps_d if args.eps_d is not None else config.thresholds.eps_d,
            args.eps_a if args.eps_a is not None else config.thresholds.eps_a,
        )
    palette = palette_with_colors(config.color_overrides) if config.color_overrides else None
    os.makedirs(args.out_dir, exist_ok=True)

    mask = read_mask(args.mask, palette)
    t0 = time.perf_counter()
    polygons = vz.vectorize_mask(mask, config.thresholds)
    t1 = time.perf_counter()
    mesh = r3.extrude(polygons, config.profile)
    t2 = time.perf_counter()

    poly_path = os.path.join(args.out_dir, "polygons.txt")
    mesh_path = os.path.join(args.out_dir, "mesh.obj")
    vz.write_polygons(poly_path, polygons)
    r3.write_obj(mesh_path, mesh)

    manifest = dict(config.echo())
    manifest["input"] = os.path.abspath(args.mask)
    manifest["polygons"] = str(len(polygons))
    manifest["vectorize_seconds"] = f"{t1 - t0:.3f}"
    manifest["reconstruct_seconds"] = f"{t2 - t1:.3f}"
    write_keyvalues(os.path.join(args.out_dir, "manifest.txt"), manifest)
    print(f"wrote {poly_path}, {mesh_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planvec",
        description="Floor-plan mask vectorization, 3D reconstruction, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rasterize", help="rasterize an annotation document to a mask")
    p.add_argument("svg")
    p.add_argument("out")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--mapping", help="key=value file mapping class attributes to shape kinds")
    p.add_argument("--ids", action="store_true", help="write raw class IDs instead of colors")
    p.set_defaults(func=cmd_rasterize)

    p = sub.add_parser("vectorize", help="convert a mask to refined polygons")
    p.add_argument("mask")
    p.add_argument("out")
    p.add_argument("--eps-u", dest="eps_u", type=float, default=0.5)
    p.add_argument("--eps-d", dest="eps_d", type=float, default=4.0)
    p.add_argument("--eps-a", dest="eps_a", type=float, default=math.cos(math.radians(14.0)))
    p.add_argument("--format", choices=("lines", "geojson"), default="lines")
    p.set_defaults(func=cmd_vectorize)

    p = sub.add_parser("reconstruct", help="extrude polygons into a mesh file")
    p.add_argument("polygons")
    p.add_argument("out")
    p.add_argument("--profile", help="key=value height profile file")
    p.add_argument("--pixel-scale", dest="pixel_scale", type=float)
    p.add_argument("--strict", action="store_true",
                   help="fail on self-intersecting polygons instead of skipping them")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("heatmaps", help="write per-opening-class endpoint heatmaps")
    p.add_argument("mask")
    p.add_argument("out_dir")
    p.add_argument("--betas", default="2,10")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_heatmaps)

    p = sub.add_parser("evaluate", help="score a predicted mask against ground truth")
    p.add_argument("pred")
    p.add_argument("truth")
    p.add_argument("--merge", action="append",
                   help="score a class union, e.g. door+window=openings")
    p.add_argument("--out", help="also write machine-readable key=value metrics")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="vectorize and reconstruct in one run")
    p.add_argument("mask")
    p.add_argument("out_dir")
    p.add_argument("--config", help="key=value pipeline configuration file")
    p.add_argument("--eps-u", dest="eps_u", type=float)
    p.add_argument("--eps-d", dest="eps_d", type=float)
    p.add_argument("--eps-a", dest="eps_a", type=float)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail(EXIT_MISSING_INPUT, f"input file not found: {exc.args[0]}")
    except (MalformedDocument, UnparseableGeometry) as exc:
        return _fail(EXIT_PARSE, str(exc))
    except DimensionMismatch as exc:
        return _fail(EXIT_SHAPE, str(exc))
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except PlanvecError as exc:
        return _fail(EXIT_OTHER, str(exc))


if __name__ == "__main__":
    sys.exit(main())
