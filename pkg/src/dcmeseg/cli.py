"""Command-line front end: ``dcmeseg <command> ...``.

Exit status is 0 on success, 2 on invalid input and 3 on I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io as fio
from .codec import DecodeParams, cm_pixel, decode, encode
from .core import CLASS_IDS, Dims, GridSpec, ValidationError
from .evaluation import (DETECTION_THRESHOLDS, ApThresholds, apply_class_oracle,
                         classification_accuracy, detection_accuracy,
                         evaluate_many, halfres_roundtrip_predictions,
                         instance_oracle_predictions, merge_accuracy)
from .grid import build_class_grid, class_of_instance, derive_priority
from .loss import LossConfig, decoder_loss
from .synth import SHAPES, SceneSpec, generate_scene
from .viz import have_png, save_class_map, save_magnitude

log = logging.getLogger("dcmeseg")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3


def _class_list(text: str) -> tuple[int, ...]:
    out = []
    for t in text.replace(",", " ").split():
        if t in CLASS_IDS:
            out.append(CLASS_IDS[t])
        elif t.isdigit():
            out.append(int(t))
        else:
            raise ValidationError(f"unknown class {t!r}")
    return tuple(out)


def _decode_params(args) -> DecodeParams:
    return DecodeParams(args.min_votes, args.merge_radius, args.assign_tol, args.fg_threshold)


def _write_or_print(path, text: str):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        fio._write_text(path, text)


def _read_many(reader, paths):
    with ThreadPoolExecutor() as pool:
        return list(pool.map(reader, paths))


def cmd_synth(args):
    spec = SceneSpec(Dims(args.rows, args.cols), args.n_instances, tuple(args.shapes), _class_list(args.classes),
                     args.min_separation, args.seed, args.min_size, args.max_size, args.min_area, args.align)
    fio.write_label_map(args.out, generate_scene(spec))


def cmd_annotate(args):
    paths = list(fio.iter_files(args.maps, (".ilm", ".txt", ".png")))
    if not paths:
        raise ValidationError("no label maps given")
    maps = _read_many(fio.read_label_map, paths)
    gs = GridSpec(args.grid_n)
    priority = fio.read_priority(args.priority) if args.priority else derive_priority(maps)
    log.info("priority: %s", " ".join(map(str, priority)))
    if len(paths) > 1 and not args.out_dir:
        raise ValidationError("several label maps need --out-dir")
    for path, m in zip(paths, maps):
        grid = build_class_grid(m, gs, priority)
        if args.out_dir:
            out = Path(args.out_dir) / (path.stem + ".cg")
            Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        else:
            out = args.out
        if out is None:
            sys.stdout.write(fio.format_class_grid(grid))
        else:
            fio.write_class_grid(out, grid)
        if args.render:
            render = Path(args.render)
            if len(paths) > 1:
                render = render.with_name(f"{path.stem}_{render.name}")
            save_class_map(render, grid, m.dims, args.format)


def cmd_encode(args):
    vf = encode(fio.read_label_map(args.map))
    fio.write_vector_field(args.out, vf)
    if args.render:
        save_magnitude(args.render, vf, args.format)


def cmd_decode(args):
    vf = fio.read_vector_field(args.field)
    dets = decode(vf, _decode_params(args))
    if args.grid:
        grid = fio.read_class_grid(args.grid)
        if not grid.fits(vf.dims):
            raise ValidationError(f"{args.grid}: grid {tuple(grid.block_dims)} does not match field {tuple(vf.dims)}")
        for d in dets:
            d.class_id = class_of_instance(cm_pixel(d.center, vf.dims), grid, vf.dims)
    _write_or_print(args.out, fio.format_detections(dets, *vf.dims))


def _pair(paths_a, paths_b, name_a, name_b):
    if len(paths_a) != len(paths_b):
        raise ValidationError(f"got {len(paths_a)} {name_a} files but {len(paths_b)} {name_b} files")
    return list(zip(paths_a, paths_b))


def cmd_eval(args):
    thresholds = ApThresholds.parse(args.thresholds)
    gts = list(fio.iter_files(args.gt, (".ilm", ".txt", ".png")))
    order = sorted(range(len(gts)), key=lambda i: Path(gts[i]).name)
    gt_maps = _read_many(fio.read_label_map, gts)
    sections = []

    if args.mode in ("standard", "class-oracle"):
        if not args.det:
            raise ValidationError(f"--det is required in {args.mode} mode")
        det_paths = list(fio.iter_files(args.det, (".det", ".txt")))
        _pair(det_paths, gts, "detection", "ground truth")
        loaded = _read_many(fio.read_detections, det_paths)
        preds = []
        for (dets, dims), gt, path in zip(loaded, gt_maps, det_paths):
            if tuple(dims) != tuple(gt.dims):
                raise ValidationError(f"{path}: detections are {dims}, ground truth is {tuple(gt.dims)}")
            preds.append(apply_class_oracle(dets, gt) if args.mode == "class-oracle" else dets)
        pairs = [(preds[i], gt_maps[i]) for i in order]
        sections.append(fio.format_report(evaluate_many(pairs, thresholds)))
        acc_rows = []
        for t in DETECTION_THRESHOLDS:
            hits = sum(detection_accuracy(loaded[i][0], gt_maps[i], t)[0] for i in order)
            total = sum(len(gt_maps[i].classes) for i in order)
            acc_rows.append((t, hits, total, 100.0 * hits / total if total else 0.0))
        sections.append(fio.format_detection_accuracy(acc_rows))
    elif args.mode == "instance-oracle":
        if not args.grid:
            raise ValidationError("--grid is required in instance-oracle mode")
        grid_paths = list(fio.iter_files(args.grid, (".cg", ".txt")))
        _pair(grid_paths, gts, "grid", "ground truth")
        grids = _read_many(fio.read_class_grid, grid_paths)
        pairs = [(instance_oracle_predictions(gt_maps[i], grids[i]), gt_maps[i]) for i in order]
        sections.append(fio.format_report(evaluate_many(pairs, thresholds)))
        acc = merge_accuracy(classification_accuracy(gt_maps[i], grids[i]) for i in order)
        sections.append(fio.format_accuracy(acc))
    else:
        pairs = [(halfres_roundtrip_predictions(gt_maps[i]), gt_maps[i]) for i in order]
        sections.append(fio.format_report(evaluate_many(pairs, thresholds)))

    _write_or_print(args.out, "\n".join(sections))


def cmd_loss_eval(args):
    target = fio.read_vector_field(args.target)
    pred = fio.read_vector_field(args.prediction)
    res = decoder_loss(target, pred, LossConfig(args.amplitude))
    g = res.gradient
    print(f"samples      {g.size}")
    print(f"loss         {res.reported_loss:.6g}")
    print(f"grad_max_abs {np.abs(g).max():.6g}")
    print(f"grad_mean    {g.mean():.6g}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dcmeseg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def decode_flags(sp):
        d = DecodeParams()
        sp.add_argument("--min-votes", type=int, default=d.min_votes)
        sp.add_argument("--merge-radius", type=float, default=d.merge_radius)
        sp.add_argument("--assign-tol", type=float, default=d.assign_tolerance)
        sp.add_argument("--fg-threshold", type=float, default=d.fg_threshold)

    fmt_default = "png" if have_png() else "text"

    sp = sub.add_parser("synth", help="generate a synthetic label map")
    sp.add_argument("--rows", type=int, default=128)
    sp.add_argument("--cols", type=int, default=128)
    sp.add_argument("-n", "--n-instances", type=int, default=5)
    sp.add_argument("--shapes", nargs="+", choices=SHAPES, default=list(SHAPES))
    sp.add_argument("--classes", default="1,2,3,4,5,6,7,8", help="class ids or names")
    sp.add_argument("--min-separation", type=float, default=0.0)
    sp.add_argument("--min-area", type=int, default=1)
    sp.add_argument("--min-size", type=int, default=4)
    sp.add_argument("--max-size", type=int, default=32)
    sp.add_argument("--align", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("annotate", help="build encoder class grids")
    sp.add_argument("maps", nargs="+")
    sp.add_argument("--grid-n", type=int, default=4)
    sp.add_argument("--priority", help="file with class ids, highest priority first")
    sp.add_argument("-o", "--out")
    sp.add_argument("--out-dir")
    sp.add_argument("--render", help="also write the class map image here")
    sp.add_argument("--format", choices=("text", "png"), default=fmt_default)
    sp.set_defaults(func=cmd_annotate)

    sp = sub.add_parser("encode", help="label map -> displacement field")
    sp.add_argument("map")
    sp.add_argument("-o", "--out", required=True)
    sp.add_argument("--render", help="also write the magnitude image here")
    sp.add_argument("--format", choices=("text", "png"), default=fmt_default)
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("decode", help="displacement field -> detections")
    sp.add_argument("field")
    sp.add_argument("--grid", help="class grid used to label detections")
    sp.add_argument("-o", "--out")
    decode_flags(sp)
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("eval", help="score detections")
    sp.add_argument("--mode", choices=("standard", "instance-oracle", "class-oracle", "roundtrip"),
                    default="standard")
    sp.add_argument("--gt", nargs="+", required=True)
    sp.add_argument("--det", nargs="+")
    sp.add_argument("--grid", nargs="+")
    sp.add_argument("--thresholds", default="0.5:0.95:0.05")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("loss-eval", help="clipped decoder loss between two fields")
    sp.add_argument("target")
    sp.add_argument("prediction")
    sp.add_argument("--amplitude", type=float, default=LossConfig().amplitude)
    sp.set_defaults(func=cmd_loss_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ValidationError as e:
        print(f"dcmeseg: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"dcmeseg: io error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
