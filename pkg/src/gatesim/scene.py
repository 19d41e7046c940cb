"""Scene randomization and ground-truth annotation.

Gates are dropped uniformly inside the physical-world bounds with a uniform
yaw about the world vertical, rejection-resampled until every pair of gate
centers is at least `min_distance` apart. Annotations are computed
analytically from the camera model: the panel corners project to pixels, the
axis-aligned hull (clamped to the viewport) becomes the bounding box, and a
gate qualifies as the target when it is the closest one with at least three
corners inside the frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraModel, project_point
from .errors import ConfigError, GeometryError, PlacementError
from .geometry import cross3, rotation_matrix, yaw_quat
from .mesh import GateSpec

CATEGORY_NAMES = ("target", "front", "back")

_WORLD_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class SceneConfig:
    """Randomization parameters for one scene."""

    max_gates: int
    min_distance: float
    bounds_min: np.ndarray
    bounds_max: np.ndarray
    specs: tuple[GateSpec, ...]
    yaw_range: tuple[float, float] = (0.0, 2.0 * np.pi)
    max_attempts: int = 100

    def __post_init__(self):
        if self.max_gates < 1:
            raise ConfigError("max_gates must be at least 1")
        if self.min_distance <= 0:
            raise ConfigError("min_distance must be positive")
        lo = np.asarray(self.bounds_min, dtype=np.float64).reshape(3)
        hi = np.asarray(self.bounds_max, dtype=np.float64).reshape(3)
        # a flat z-range (gates on the floor) is fine; a point/line box is not
        if np.any(hi < lo) or not np.any(hi > lo):
            raise ConfigError("bounds must span a non-degenerate region")
        if not self.specs:
            raise ConfigError("scene needs at least one gate spec")
        if self.yaw_range[1] < self.yaw_range[0]:
            raise ConfigError("yaw_range must be an ascending interval")
        object.__setattr__(self, "bounds_min", lo)
        object.__setattr__(self, "bounds_max", hi)
        object.__setattr__(self, "specs", tuple(self.specs))


@dataclass(frozen=True, eq=False)
class GateInstance:
    """One placed gate: spec + world position of the mesh origin + yaw.

    World-frame geometry (center, normal, panel corners) is computed once at
    construction; instances are immutable and lock-free to share.
    """

    spec: GateSpec
    position: np.ndarray
    yaw: float

    def __post_init__(self):
        position = np.asarray(self.position, dtype=np.float64).reshape(3)
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "yaw", float(self.yaw))
        rotation = rotation_matrix(yaw_quat(self.yaw))
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "world_center", position + rotation @ self.spec.center_offset)
        object.__setattr__(self, "world_normal", rotation @ self.spec.normal_local)
        normal = self.spec.normal_local
        lateral = cross3(_WORLD_UP, normal)
        norm = float(np.linalg.norm(lateral))
        if norm < 1e-9:
            raise GeometryError("gate normal parallel to world vertical")
        lateral /= norm
        vertical = cross3(normal, lateral)
        half_w = 0.5 * self.spec.width * lateral
        half_h = 0.5 * self.spec.height * vertical
        local = self.spec.center_offset + np.array(
            [-half_w - half_h, half_w - half_h, half_w + half_h, -half_w + half_h]
        )
        # (4,3) corners of the width x height panel around the gate center
        object.__setattr__(self, "corners_world", local @ rotation.T + position)


@dataclass(frozen=True)
class GateAnnotation:
    """Per-gate record: pixel bbox, category, metric distance, visibility."""

    bbox: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max
    category: str
    distance: float
    visible_corners: int


def sample_gate_poses(cfg: SceneConfig, rng: np.random.Generator) -> list[GateInstance]:
    """Draw a random gate layout.

    Draw order (fixed for reproducibility): gate count, then per gate a spec
    index followed by (position, yaw) attempts until the spacing constraint
    holds. Each gate gets at most cfg.max_attempts placement attempts.
    """
    count = int(rng.integers(1, cfg.max_gates, endpoint=True))
    placed: list[GateInstance] = []
    centers: list[np.ndarray] = []
    for _ in range(count):
        spec = cfg.specs[int(rng.integers(len(cfg.specs)))]
        for _attempt in range(cfg.max_attempts):
            position = rng.uniform(cfg.bounds_min, cfg.bounds_max)
            yaw = float(rng.uniform(cfg.yaw_range[0], cfg.yaw_range[1]))
            candidate = GateInstance(spec, position, yaw)
            center = candidate.world_center
            if all(np.linalg.norm(center - c) >= cfg.min_distance for c in centers):
                placed.append(candidate)
                centers.append(center)
                break
        else:
            raise PlacementError(
                f"could not place gate {len(placed) + 1}/{count} after "
                f"{cfg.max_attempts} attempts; bounds too small for "
                f"min_distance={cfg.min_distance}"
            )
    return placed


def _pixel_in_viewport(pixel: np.ndarray, cam: CameraModel) -> bool:
    vp = cam.viewport
    return (
        vp.x <= pixel[0] <= vp.x + vp.width
        and vp.y <= pixel[1] <= vp.y + vp.height
    )


def _project_corners(cam: CameraModel, gate: GateInstance):
    out = []
    for corner in gate.corners_world:
        try:
            out.append(project_point(cam, corner))
        except GeometryError:
            out.append(None)
    return out


def visible_corner_count(cam: CameraModel, gate: GateInstance) -> int:
    """How many of the 4 panel corners project in front and inside the frame."""
    count = 0
    for proj in _project_corners(cam, gate):
        if proj is not None and proj.in_front and _pixel_in_viewport(proj.pixel, cam):
            count += 1
    return count


def select_target(cam: CameraModel, gates: list[GateInstance]) -> int | None:
    """Index of the closest gate whose center is in front and which keeps at
    least three corners inside the frame; None when no gate qualifies."""
    best = None
    best_distance = np.inf
    for i, gate in enumerate(gates):
        try:
            center = project_point(cam, gate.world_center)
        except GeometryError:
            continue
        if not center.in_front:
            continue
        if visible_corner_count(cam, gate) < 3:
            continue
        distance = float(np.linalg.norm(gate.world_center - cam.eye))
        if distance < best_distance:
            best = i
            best_distance = distance
    return best


def annotate_scene(cam: CameraModel, gates: list[GateInstance],
                   min_visible_corners: int = 1) -> list[GateAnnotation]:
    """Ground truth for every gate facing the camera with at least
    `min_visible_corners` corners in frame.

    The bbox is the axis-aligned hull of the in-front projected panel corners,
    clamped to the viewport. Category is `target` for select_target's pick,
    otherwise front/back from the gate normal versus the camera direction
    (perpendicular views count as front).
    """
    target_idx = select_target(cam, gates)
    vp = cam.viewport
    annotations = []
    for i, gate in enumerate(gates):
        try:
            center = project_point(cam, gate.world_center)
        except GeometryError:
            continue
        if not center.in_front:
            continue
        projections = _project_corners(cam, gate)
        visible = sum(
            1
            for p in projections
            if p is not None and p.in_front and _pixel_in_viewport(p.pixel, cam)
        )
        if visible < max(1, min_visible_corners):
            continue
        pixels = np.array([p.pixel for p in projections if p is not None and p.in_front])
        x_min = float(np.clip(pixels[:, 0].min(), vp.x, vp.x + vp.width))
        x_max = float(np.clip(pixels[:, 0].max(), vp.x, vp.x + vp.width))
        y_min = float(np.clip(pixels[:, 1].min(), vp.y, vp.y + vp.height))
        y_max = float(np.clip(pixels[:, 1].max(), vp.y, vp.y + vp.height))
        if i == target_idx:
            category = "target"
        else:
            facing = float(gate.world_normal @ (cam.eye - gate.world_center))
            category = "front" if facing >= 0.0 else "back"
        annotations.append(
            GateAnnotation(
                bbox=(x_min, y_min, x_max, y_max),
                category=category,
                distance=float(np.linalg.norm(gate.world_center - cam.eye)),
                visible_corners=visible,
            )
        )
    return annotations
