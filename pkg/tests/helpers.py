"""Shared test utilities: independent oracles and throwaway asset builders.

The projection oracle here deliberately avoids the package's matrix pipeline:
it rotates the camera basis with an explicit quaternion-to-matrix expansion
and applies the scalar pinhole formula directly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from gatesim.camera import CameraPose
from gatesim.geometry import yaw_quat
from gatesim.mesh import frame_mesh, serialize_obj


def oracle_rotate(q, v):
    """Rotate v by unit quaternion q via the expanded rotation matrix."""
    w, x, y, z = q
    rot = np.array(
        [
            [w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z],
        ]
    )
    return rot @ np.asarray(v, dtype=float)


def pinhole_pixel(position, quaternion, intr, point):
    """Scalar pinhole oracle: returns ((u, v), depth) for a world point.

    u = fx * (d . right) / (d . forward) + cx
    v = cy - fy * (d . up) / (d . forward)
    with the camera basis built directly from the pose quaternion
    (body x = forward, body z = up, right = forward x up).
    """
    position = np.asarray(position, dtype=float)
    forward = oracle_rotate(quaternion, (1.0, 0.0, 0.0))
    up = oracle_rotate(quaternion, (0.0, 0.0, 1.0))
    right = np.cross(forward, up)
    d = np.asarray(point, dtype=float) - position
    depth = float(d @ forward)
    u = intr.fx * (d @ right) / depth + intr.cx
    v = intr.cy - intr.fy * (d @ up) / depth
    return np.array([u, v]), depth


def random_unit_quaternion(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def smooth_background(rng, width, height):
    """Low-frequency RGB texture (reads as a blurry photo to the Laplacian)."""
    small = rng.uniform(30.0, 220.0, size=(height // 8 + 2, width // 8 + 2, 3))
    img = np.kron(small, np.ones((8, 8, 1)))[:height, :width]
    for _ in range(4):
        img = (
            img
            + np.roll(img, 1, axis=0)
            + np.roll(img, -1, axis=0)
            + np.roll(img, 1, axis=1)
            + np.roll(img, -1, axis=1)
        ) / 5.0
    return np.clip(img, 0, 255).astype(np.uint8)


def sharp_background(rng, width, height):
    base = smooth_background(rng, width, height).astype(np.float64)
    noisy = base + rng.uniform(-60.0, 60.0, size=base.shape)
    return np.clip(noisy, 0, 255).astype(np.uint8)


def ring_pose(index, count, radius=6.0, altitude=1.4):
    """Camera pose on a circle around the origin, facing inward."""
    angle = 2.0 * np.pi * index / count
    position = (radius * np.cos(angle), radius * np.sin(angle), altitude)
    return CameraPose(position, yaw_quat(angle + np.pi))


def write_demo_assets(root: Path, n_backgrounds: int = 3, size=(160, 120),
                      seed: int = 0, max_gates: int = 2) -> dict:
    """Write a self-contained mesh/backgrounds/poses/config asset tree."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    width, height = size

    mesh_dir = root / "meshes"
    mesh_dir.mkdir(parents=True, exist_ok=True)
    (mesh_dir / "gate.obj").write_text(serialize_obj(frame_mesh(1.5, 1.5, 0.15)))

    bg_dir = root / "backgrounds"
    bg_dir.mkdir(parents=True, exist_ok=True)
    rows = ["filename,x,y,z,qw,qx,qy,qz"]
    for i in range(n_backgrounds):
        name = f"bg_{i:03d}.png"
        img = smooth_background(rng, width, height) if i % 2 == 0 else sharp_background(rng, width, height)
        PILImage.fromarray(img).save(bg_dir / name)
        pose = ring_pose(i, n_backgrounds)
        q = pose.quaternion
        rows.append(
            f"{name},{pose.position[0]},{pose.position[1]},{pose.position[2]},"
            f"{q[0]},{q[1]},{q[2]},{q[3]}"
        )
    poses = root / "poses.csv"
    poses.write_text("\n".join(rows) + "\n")

    config = {
        "intrinsics": {"fx": width * 0.75, "fy": width * 0.75, "cx": width / 2, "cy": height / 2},
        "viewport": {"width": width, "height": height},
        "scene": {
            "max_gates": max_gates,
            "min_distance": 1.8,
            "bounds": {"min": [-3.0, -3.0, 0.9], "max": [3.0, 3.0, 1.7]},
            "gates": [
                {
                    "mesh": "gate.obj",
                    "center": [0.0, 0.0, 0.0],
                    "width": 1.5,
                    "height": 1.5,
                    "normal": [1.0, 0.0, 0.0],
                    "color": [230, 90, 40],
                }
            ],
        },
        "blur": {"thresholds": [100.0, 300.0, 1000.0], "kernel_lengths": [5, 9, 13]},
        "noise_sigma": 4.0,
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=1))
    return {
        "config": config_path,
        "backgrounds": bg_dir,
        "poses": poses,
        "meshes": mesh_dir,
        "size": size,
    }


def memory_background(pixels, pose, name="mem.png"):
    """BackgroundRecord with pre-seeded pixels (never touches disk)."""
    from gatesim.dataset import BackgroundRecord

    record = BackgroundRecord(Path(name), pose)
    record._pixels = np.asarray(pixels)
    return record
