"""Command-line interface.

Subcommands: generate (dataset synthesis), crop (region-of-interest
pre-processing), evaluate (detection + distance tables), simulate (the
gate-crossing protocol sweep). Exit codes: 0 success, 1 configuration error,
2 generation/runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from . import dataset as ds
from . import guidance
from .config import config_snapshot, load_config
from .errors import ConfigError, GateSimError
from .metrics import (
    Detection,
    GroundTruth,
    distance_report,
    evaluate_detections,
    format_class_table,
    format_detection_table,
    format_distance_table,
    match_detections,
)


class _Parser(argparse.ArgumentParser):
    # usage problems are configuration errors (exit code 1), not crashes
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gatesim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a semi-synthetic dataset")
    gen.add_argument("--config", required=True, help="pipeline config JSON")
    gen.add_argument("--backgrounds", required=True, help="background image directory")
    gen.add_argument("--poses", required=True, help="pose log CSV")
    gen.add_argument("--meshes", required=True, help="gate mesh directory")
    gen.add_argument("--count", type=int, default=100, help="samples to generate")
    gen.add_argument("--seed", type=int, default=0, help="master seed")
    gen.add_argument("--out", required=True, help="output dataset directory")
    gen.add_argument("--split", default=None, metavar="TRAIN:VAL",
                     help="write train/ and val/ subsets (e.g. 40000:4000); overrides --count")
    gen.add_argument("--workers", type=int, default=1, help="parallel workers")

    crop = sub.add_parser("crop", help="keep a bbox region, black out the rest")
    crop.add_argument("--image", required=True)
    crop.add_argument("--bbox", required=True, metavar="X,Y,W,H")
    crop.add_argument("--out", required=True)

    ev = sub.add_parser("evaluate", help="detection/distance evaluation tables")
    ev.add_argument("--gt", required=True, help="dataset manifest.json with ground truth")
    ev.add_argument("--pred", required=True, help="predictions JSON")
    ev.add_argument("--iou", default="0.5,0.75,0.9", help="IoU thresholds")
    ev.add_argument("--distance-thresholds", default="0.75,0.5,0.25",
                    help="distance accuracy thresholds in meters")

    sim = sub.add_parser("simulate", help="run the gate-crossing protocol sweep")
    sim.add_argument("--speeds", default="0.5,1,2", help="cruise speeds in m/s")
    sim.add_argument("--starts", default="left,centre,right")
    sim.add_argument("--runs", type=int, default=5, help="runs per (speed, start) cell")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output report directory")
    sim.add_argument("--pixel-sigma", type=float, default=guidance.DEFAULT_PIXEL_SIGMA,
                     help="perception pixel noise sigma (0 disables)")
    sim.add_argument("--distance-mae", type=float, default=guidance.DEFAULT_DISTANCE_MAE,
                     help="calibrated distance-noise MAE in meters (0 disables)")
    sim.add_argument("--timeout", type=float, default=60.0, help="per-run timeout, seconds")
    return parser


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}: {exc}") from exc


def _cmd_generate(args) -> int:
    cfg = load_config(args.config, mesh_dir=args.meshes)
    snapshot = config_snapshot(args.config)
    backgrounds = ds.load_backgrounds(
        args.poses, args.backgrounds,
        expected_size=(cfg.viewport.width, cfg.viewport.height),
    )
    out = Path(args.out)
    if args.split:
        try:
            n_train, n_val = (int(v) for v in args.split.split(":"))
        except ValueError as exc:
            raise ConfigError(f"bad --split {args.split!r}; expected TRAIN:VAL") from exc
        samples = ds.generate_dataset(backgrounds, cfg, n_train + n_val, args.seed,
                                      workers=args.workers)
        ds.write_dataset(samples[:n_train], out / "train", config_snapshot=snapshot)
        ds.write_dataset(samples[n_train:], out / "val", config_snapshot=snapshot)
        print(f"wrote {min(n_train, len(samples))} train + "
              f"{max(0, len(samples) - n_train)} val samples to {out}")
    else:
        samples = ds.generate_dataset(backgrounds, cfg, args.count, args.seed,
                                      workers=args.workers)
        ds.write_dataset(samples, out, config_snapshot=snapshot)
        print(f"wrote {len(samples)} samples to {out}")
    return 0


def _cmd_crop(args) -> int:
    try:
        x, y, w, h = (float(v) for v in args.bbox.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad --bbox {args.bbox!r}; expected X,Y,W,H") from exc
    with PILImage.open(args.image) as img:
        pixels = np.asarray(img.convert("RGB"))
    cropped = ds.crop_to_bbox(pixels, (x, y, x + w, y + h))
    PILImage.fromarray(cropped).save(args.out)
    print(f"wrote {args.out}")
    return 0


def _load_ground_truth(manifest_path: str):
    manifest = ds.read_manifest(manifest_path)
    names = dict(enumerate(manifest.categories))
    gts = []
    distances = {}
    for sample in manifest.samples:
        for k, ann in enumerate(sample["annotations"]):
            x, y, w, h = ann["bbox"]
            gt = GroundTruth(
                image_id=sample["id"],
                bbox=(x, y, x + w, y + h),
                category=names[ann["category_id"]],
            )
            gts.append(gt)
            distances[id(gt)] = ann.get("distance")
    return manifest, gts, distances


def _cmd_evaluate(args) -> int:
    thresholds = _parse_floats(args.iou)
    manifest, gts, gt_distance = _load_ground_truth(args.gt)
    names = dict(enumerate(manifest.categories))
    try:
        pred_doc = json.loads(Path(args.pred).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"predictions {args.pred} is not valid JSON: {exc}") from exc
    dets = []
    det_distance = {}
    for p in pred_doc:
        x, y, w, h = p["bbox"]
        category = p["category"] if "category" in p else names[p["category_id"]]
        det = Detection(
            image_id=p["image_id"], bbox=(x, y, x + w, y + h),
            category=category, score=float(p.get("score", 1.0)),
        )
        dets.append(det)
        det_distance[id(det)] = p.get("distance")

    report = evaluate_detections(dets, gts, thresholds)
    print(format_detection_table(report))
    print()
    print(format_class_table(report))

    # distance table over matched pairs carrying distances on both sides
    pairs = []
    for category in report.categories:
        cat_dets = [d for d in dets if d.category == category]
        cat_gts = [g for g in gts if g.category == category]
        for det, gt in match_detections(cat_dets, cat_gts, thresholds[0]):
            if gt is None:
                continue
            pred_d, true_d = det_distance.get(id(det)), gt_distance.get(id(gt))
            if pred_d is not None and true_d is not None:
                pairs.append((float(pred_d), float(true_d)))
    if pairs:
        pred_d, true_d = zip(*pairs)
        print()
        print(format_distance_table(
            distance_report(list(pred_d), list(true_d), _parse_floats(args.distance_thresholds))
        ))
    return 0


def _cmd_simulate(args) -> int:
    speeds = _parse_floats(args.speeds)
    starts = [s.strip() for s in args.starts.split(",") if s.strip()]
    noise = guidance.PerceptionNoise(
        pixel_sigma=args.pixel_sigma, distance_mae=args.distance_mae
    )
    cfg = guidance.GuidanceConfig(cruise=speeds[0], timeout=args.timeout)
    runs = guidance.run_protocol(
        speeds=speeds, starts=starts, runs=args.runs, master_seed=args.seed,
        noise=noise, cfg=cfg,
    )
    stats = guidance.crossing_stats(runs)
    table = guidance.format_crossing_table(stats)
    print(table)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "crossing_stats.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["speed_mps", "start", "runs", "crossed", "success_rate",
                         "mean_offset_m", "max_offset_m"])
        for (speed, label), cell in sorted(stats.items()):
            writer.writerow([speed, label, cell.n_runs, cell.n_crossed,
                             f"{cell.success_rate:.4f}", f"{cell.mean_offset:.4f}",
                             f"{cell.max_offset:.4f}"])
    with open(out / "runs.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["run", "speed_mps", "start", "seed", "success",
                         "offset_lateral_m", "offset_vertical_m"])
        for i, run in enumerate(runs):
            off = run.crossing_offset
            writer.writerow([
                i, run.cruise, run.start_label, run.seed, int(run.success),
                "" if off is None else f"{off[0]:.4f}",
                "" if off is None else f"{off[1]:.4f}",
            ])
    with open(out / "trajectories.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["run", "t", "x", "y", "z", "vx", "vy", "vz"])
        for i, run in enumerate(runs):
            for row in run.trajectory:
                writer.writerow([i] + [f"{v:.4f}" for v in row])
    print(f"wrote report to {out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "crop":
            return _cmd_crop(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (GateSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
