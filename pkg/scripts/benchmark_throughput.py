"""Measure end-to-end sample generation throughput at 640x480.

Builds in-memory backgrounds so only the pipeline itself is timed (no disk).

Usage:
    python scripts/benchmark_throughput.py --count 200 --workers 8
"""

import argparse
import time
from pathlib import Path

import numpy as np

from gatesim.augment import default_blur_policy
from gatesim.camera import CameraPose, Intrinsics, Viewport
from gatesim.dataset import BackgroundRecord, PipelineConfig, generate_dataset, generate_sample
from gatesim.geometry import yaw_quat
from gatesim.mesh import frame_gate_spec
from gatesim.scene import SceneConfig
from gatesim.seeding import derive_seed


def in_memory_background(rng, index, count, width, height):
    small = rng.uniform(30.0, 220.0, size=(height // 8 + 2, width // 8 + 2, 3))
    img = np.kron(small, np.ones((8, 8, 1)))[:height, :width]
    img = np.clip(img + rng.uniform(-40, 40, img.shape) * (index % 2), 0, 255).astype(np.uint8)
    angle = 2.0 * np.pi * index / count
    pose = CameraPose(
        (6.0 * np.cos(angle), 6.0 * np.sin(angle), 1.5), yaw_quat(angle + np.pi)
    )
    record = BackgroundRecord(Path(f"mem_{index}.png"), pose)
    record._pixels = img
    return record


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=200)
    parser.add_argument("--workers", type=int, default=8)
    parser.add_argument("--width", type=int, default=640)
    parser.add_argument("--height", type=int, default=480)
    args = parser.parse_args()

    cfg = PipelineConfig(
        intrinsics=Intrinsics(fx=args.width * 0.75, fy=args.width * 0.75,
                              cx=args.width / 2, cy=args.height / 2),
        viewport=Viewport(args.width, args.height),
        scene=SceneConfig(
            max_gates=3, min_distance=1.8,
            bounds_min=(-3.0, -3.0, 0.9), bounds_max=(3.0, 3.0, 1.7),
            specs=(frame_gate_spec(),),
        ),
        blur=default_blur_policy(),
        noise_sigma=4.0,
    )
    rng = np.random.default_rng(0)
    backgrounds = [
        in_memory_background(rng, i, 6, args.width, args.height) for i in range(6)
    ]
    generate_sample(backgrounds, cfg, derive_seed(0, 0))  # prime caches

    start = time.perf_counter()
    samples = generate_dataset(backgrounds, cfg, args.count, master_seed=1,
                               workers=args.workers)
    elapsed = time.perf_counter() - start
    print(
        f"{len(samples)} samples at {args.width}x{args.height} in {elapsed:.2f} s"
        f" -> {len(samples) / elapsed:.1f} samples/s (workers={args.workers})"
    )


if __name__ == "__main__":
    main()
