"""Build a self-contained demo asset tree (gate mesh, procedural backgrounds
with a pose log, and a pipeline config) so the generate CLI can run without
any real capture data.

Usage:
    python scripts/make_demo_assets.py --out demo_assets --backgrounds 12
"""

import argparse
import json
from pathlib import Path

import numpy as np
from PIL import Image

from gatesim.camera import CameraPose
from gatesim.geometry import quat_from_axis_angle, quat_multiply, yaw_quat
from gatesim.mesh import frame_mesh, serialize_obj


def procedural_background(rng, width, height, sharp):
    """Low-frequency blobs; optionally overlaid with pixel noise (sharp)."""
    small = rng.uniform(30.0, 220.0, size=(height // 8 + 2, width // 8 + 2, 3))
    img = np.kron(small, np.ones((8, 8, 1)))[:height, :width]
    for _ in range(4):
        img = (
            img
            + np.roll(img, 1, axis=0) + np.roll(img, -1, axis=0)
            + np.roll(img, 1, axis=1) + np.roll(img, -1, axis=1)
        ) / 5.0
    if sharp:
        img = img + rng.uniform(-55.0, 55.0, size=img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def ring_pose(index, count, radius, altitude, rng):
    """Camera on a circle around the origin, looking inward, mild jitter."""
    angle = 2.0 * np.pi * index / count
    position = (
        radius * np.cos(angle) + rng.uniform(-0.3, 0.3),
        radius * np.sin(angle) + rng.uniform(-0.3, 0.3),
        altitude + rng.uniform(-0.2, 0.2),
    )
    yaw = angle + np.pi + rng.uniform(-0.25, 0.25)
    pitch = rng.uniform(-0.08, 0.02)  # slight downward look
    quaternion = quat_multiply(yaw_quat(yaw), quat_from_axis_angle((0, 1, 0), pitch))
    return CameraPose(position, quaternion / np.linalg.norm(quaternion))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo_assets")
    parser.add_argument("--backgrounds", type=int, default=12)
    parser.add_argument("--width", type=int, default=640)
    parser.add_argument("--height", type=int, default=480)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    rng = np.random.default_rng(args.seed)

    mesh_dir = out / "meshes"
    mesh_dir.mkdir(parents=True, exist_ok=True)
    (mesh_dir / "gate.obj").write_text(serialize_obj(frame_mesh(1.5, 1.5, 0.15)))
    (mesh_dir / "gate_legged.obj").write_text(
        serialize_obj(frame_mesh(1.5, 1.5, 0.15, leg_length=0.5))
    )

    bg_dir = out / "backgrounds"
    bg_dir.mkdir(parents=True, exist_ok=True)
    rows = ["filename,x,y,z,qw,qx,qy,qz"]
    for i in range(args.backgrounds):
        name = f"bg_{i:03d}.png"
        img = procedural_background(rng, args.width, args.height, sharp=i % 3 == 0)
        Image.fromarray(img).save(bg_dir / name)
        pose = ring_pose(i, args.backgrounds, radius=6.0, altitude=1.5, rng=rng)
        q = pose.quaternion
        rows.append(
            f"{name},{pose.position[0]:.6f},{pose.position[1]:.6f},{pose.position[2]:.6f},"
            f"{q[0]:.9f},{q[1]:.9f},{q[2]:.9f},{q[3]:.9f}"
        )
    (out / "poses.csv").write_text("\n".join(rows) + "\n")

    config = {
        "intrinsics": {
            "fx": args.width * 0.75, "fy": args.width * 0.75,
            "cx": args.width / 2, "cy": args.height / 2,
            "near": 0.05, "far": 50.0,
        },
        "viewport": {"width": args.width, "height": args.height},
        "scene": {
            "max_gates": 4,
            "min_distance": 2.0,
            "bounds": {"min": [-3.5, -3.5, 0.9], "max": [3.5, 3.5, 1.7]},
            "yaw_range": [0.0, 6.283185307179586],
            "gates": [
                {
                    "mesh": "gate.obj", "center": [0.0, 0.0, 0.0],
                    "width": 1.5, "height": 1.5, "normal": [1.0, 0.0, 0.0],
                    "color": [230, 90, 40],
                },
                {
                    "mesh": "gate_legged.obj", "center": [0.0, 0.0, 0.0],
                    "width": 1.5, "height": 1.5, "normal": [1.0, 0.0, 0.0],
                    "color": [40, 110, 220],
                },
            ],
        },
        "blur": {
            "thresholds": [100.0, 300.0, 1000.0],
            "kernel_lengths": [5, 9, 13],
            "orient_to_background": True,
        },
        "noise_sigma": 5.0,
    }
    (out / "config.json").write_text(json.dumps(config, indent=2))

    print(f"wrote demo assets to {out}/")
    print("next:")
    print(
        f"  gatesim generate --config {out}/config.json --backgrounds {out}/backgrounds"
        f" --poses {out}/poses.csv --meshes {out}/meshes --count 50 --seed 1 --out {out}/dataset"
    )


if __name__ == "__main__":
    main()
