"""Dataset orchestration: background ingestion, per-sample generation, and
writing images + annotations to disk.

A sample is fully determined by the pipeline config and its 64-bit seed: the
seeded stream drives the background pick, the gate layout, and the noise, in
that order. Batch generation derives per-sample seeds from the master seed
(see seeding.derive_seed), which makes it embarrassingly parallel and
byte-reproducible regardless of worker count.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .augment import BlurPolicy, blur_score, composite, dominant_gradient_angle
from .camera import CameraModel, CameraPose, Intrinsics, Viewport
from .errors import IngestionError, PlacementError, ValidationError
from .geometry import IDENTITY_QUAT
from .render import render_scene
from .scene import CATEGORY_NAMES, GateAnnotation, SceneConfig, annotate_scene, sample_gate_poses
from .seeding import derive_seed

log = logging.getLogger(__name__)

CATEGORY_IDS = {name: i for i, name in enumerate(CATEGORY_NAMES)}


@dataclass(eq=False)
class BackgroundRecord:
    """One pose-annotated background image; pixels and estimates are cached."""

    image_path: Path
    pose: CameraPose
    blur_score_cache: float | None = None
    _pixels: np.ndarray | None = field(default=None, repr=False)
    _gradient_angle: float | None = field(default=None, repr=False)

    def load_pixels(self) -> np.ndarray:
        if self._pixels is None:
            with PILImage.open(self.image_path) as img:
                self._pixels = np.asarray(img.convert("RGB"))
        return self._pixels

    def sharpness(self) -> float:
        if self.blur_score_cache is None:
            self.blur_score_cache = blur_score(self.load_pixels())
        return self.blur_score_cache

    def gradient_angle(self) -> float:
        if self._gradient_angle is None:
            self._gradient_angle = dominant_gradient_angle(self.load_pixels())
        return self._gradient_angle


@dataclass(eq=False)
class AnnotatedSample:
    """Composited image plus its ground truth and replay seed."""

    image: np.ndarray
    gates: list[GateAnnotation]
    background_id: str
    seed: int
    camera: dict


@dataclass(eq=False)
class DatasetManifest:
    sample_count: int
    categories: tuple[str, ...]
    samples: list[dict]
    config: dict | None = None


POSE_LOG_COLUMNS = ("filename", "x", "y", "z", "qw", "qx", "qy", "qz")


def load_backgrounds(pose_log: Path | str, image_dir: Path | str,
                     expected_size: tuple[int, int] | None = None) -> list[BackgroundRecord]:
    """Read a pose-log CSV (filename,x,y,z,qw,qx,qy,qz) into records.

    Quaternions within 1e-3 of unit norm are renormalized; anything further
    off is rejected. When expected_size=(width, height) is given, every image
    header is checked against it.
    """
    pose_log = Path(pose_log)
    image_dir = Path(image_dir)
    records: list[BackgroundRecord] = []
    with open(pose_log, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not set(POSE_LOG_COLUMNS) <= set(reader.fieldnames):
            missing = set(POSE_LOG_COLUMNS) - set(reader.fieldnames or ())
            raise IngestionError(f"pose log {pose_log} missing columns {sorted(missing)}")
        for row_num, row in enumerate(reader, start=2):
            path = image_dir / row["filename"]
            if not path.is_file():
                raise IngestionError(f"row {row_num}: image file {path} does not exist")
            try:
                position = [float(row[k]) for k in ("x", "y", "z")]
                quat = np.array([float(row[k]) for k in ("qw", "qx", "qy", "qz")])
            except ValueError as exc:
                raise IngestionError(f"row {row_num}: bad numeric field: {exc}") from exc
            norm = float(np.linalg.norm(quat))
            if abs(norm - 1.0) > 1e-3:
                raise ValidationError(
                    f"row {row_num}: quaternion norm {norm:.6f} too far from 1 to renormalize"
                )
            if expected_size is not None:
                with PILImage.open(path) as img:
                    if img.size != tuple(expected_size):
                        raise IngestionError(
                            f"row {row_num}: image {path} is {img.size}, expected {tuple(expected_size)}"
                        )
            records.append(BackgroundRecord(path, CameraPose(position, quat / norm)))
    return records


@dataclass(frozen=True, eq=False)
class PipelineConfig:
    """Everything generate_sample needs besides the backgrounds and the seed."""

    intrinsics: Intrinsics
    viewport: Viewport
    scene: SceneConfig
    blur: BlurPolicy
    noise_sigma: float
    mount_rotation: tuple = IDENTITY_QUAT
    mount_translation: tuple = (0.0, 0.0, 0.0)


def _camera_for(record: BackgroundRecord, cfg: PipelineConfig) -> CameraModel:
    return CameraModel(
        pose=record.pose,
        intrinsics=cfg.intrinsics,
        viewport=cfg.viewport,
        mount_rotation=cfg.mount_rotation,
        mount_translation=cfg.mount_translation,
    )


def generate_sample(backgrounds: list[BackgroundRecord], cfg: PipelineConfig,
                    seed: int) -> AnnotatedSample:
    """Run the full per-sample pipeline for one seed.

    Stream order: background pick, gate layout, composite noise. Identical
    (config, seed) inputs produce byte-identical samples.
    """
    if not backgrounds:
        raise ValidationError("generate_sample needs at least one background")
    rng = np.random.default_rng(seed)
    record = backgrounds[int(rng.integers(len(backgrounds)))]
    cam = _camera_for(record, cfg)
    gates = sample_gate_poses(cfg.scene, rng)
    buffers = render_scene(cam, gates)
    image = composite(
        record.load_pixels(), buffers, cfg.blur, cfg.noise_sigma, rng,
        background_score=record.sharpness(),
        background_angle=record.gradient_angle() if cfg.blur.orient_to_background else None,
    )
    annotations = annotate_scene(cam, gates)
    pose = record.pose
    return AnnotatedSample(
        image=image,
        gates=annotations,
        background_id=record.image_path.name,
        seed=seed,
        camera={
            "position": [float(v) for v in pose.position],
            "quaternion": [float(v) for v in pose.quaternion],
        },
    )


def generate_dataset(backgrounds: list[BackgroundRecord], cfg: PipelineConfig,
                     count: int, master_seed: int, workers: int = 1,
                     skip_failures: bool = True) -> list[AnnotatedSample]:
    """Generate `count` samples with per-sample seeds derived from master_seed.

    Samples whose gate placement is infeasible are logged and skipped (batch
    mode); pass skip_failures=False to surface the PlacementError instead.
    Output order and content follow the sample index regardless of worker
    count or scheduling. `workers` is a cap: the pool never exceeds the CPU
    count, since oversubscribing CPU-bound workers only adds contention.
    """

    def build(index: int) -> AnnotatedSample | None:
        try:
            return generate_sample(backgrounds, cfg, derive_seed(master_seed, index))
        except PlacementError as exc:
            if not skip_failures:
                raise
            log.warning("sample %d skipped: %s", index, exc)
            return None

    pool_size = max(1, min(workers, os.cpu_count() or 1))
    if pool_size <= 1:
        results = [build(i) for i in range(count)]
    else:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            results = list(pool.map(build, range(count)))
    return [s for s in results if s is not None]


def _bbox_xywh(bbox: tuple[float, float, float, float]) -> list[float]:
    x_min, y_min, x_max, y_max = bbox
    return [x_min, y_min, x_max - x_min, y_max - y_min]


def write_dataset(samples: list[AnnotatedSample], out_dir: Path | str,
                  config_snapshot: dict | None = None) -> DatasetManifest:
    """Write zero-padded PNGs plus a manifest.json.

    Manifest bboxes are [x_min, y_min, width, height] in pixels, categories
    are integer ids into the manifest category table, distances in meters.
    """
    out_dir = Path(out_dir)
    image_dir = out_dir / "images"
    image_dir.mkdir(parents=True, exist_ok=True)
    pad = max(5, len(str(max(len(samples) - 1, 0))))
    sample_records = []
    for i, sample in enumerate(samples):
        name = f"{i:0{pad}d}.png"
        PILImage.fromarray(sample.image).save(image_dir / name)
        sample_records.append(
            {
                "id": i,
                "file_name": f"images/{name}",
                "width": int(sample.image.shape[1]),
                "height": int(sample.image.shape[0]),
                "background": sample.background_id,
                "seed": int(sample.seed),
                "camera": sample.camera,
                "annotations": [
                    {
                        "bbox": _bbox_xywh(g.bbox),
                        "category_id": CATEGORY_IDS[g.category],
                        "distance": g.distance,
                        "visible_corners": g.visible_corners,
                    }
                    for g in sample.gates
                ],
            }
        )
    manifest = DatasetManifest(
        sample_count=len(samples),
        categories=CATEGORY_NAMES,
        samples=sample_records,
        config=config_snapshot,
    )
    payload = {
        "sample_count": manifest.sample_count,
        "categories": [{"id": i, "name": n} for i, n in enumerate(manifest.categories)],
        "config": manifest.config,
        "samples": manifest.samples,
    }
    (out_dir / "manifest.json").write_text(json.dumps(payload, indent=1, sort_keys=True))
    return manifest


def read_manifest(path: Path | str) -> DatasetManifest:
    payload = json.loads(Path(path).read_text())
    return DatasetManifest(
        sample_count=payload["sample_count"],
        categories=tuple(c["name"] for c in payload["categories"]),
        samples=payload["samples"],
        config=payload.get("config"),
    )


def crop_to_bbox(img: np.ndarray, bbox: tuple[float, float, float, float]) -> np.ndarray:
    """Keep the bbox region, zero everything else (same output dimensions)."""
    img = np.asarray(img)
    height, width = img.shape[0], img.shape[1]
    x_min, y_min, x_max, y_max = bbox
    c0 = max(0, int(np.floor(x_min)))
    c1 = min(width, int(np.ceil(x_max)))
    r0 = max(0, int(np.floor(y_min)))
    r1 = min(height, int(np.ceil(y_max)))
    if c1 <= c0 or r1 <= r0:
        raise ValidationError(f"bbox {bbox} does not intersect a {width}x{height} image")
    out = np.zeros_like(img)
    out[r0:r1, c0:c1] = img[r0:r1, c0:c1]
    return out
