"""Virtual camera matched to the calibrated physical camera.

The pose (position + unit quaternion) produces look-at target and up points,
those feed a right-handed view matrix, and the calibrated intrinsics build a
perspective projection whose normalized device coordinates map to pixels via
the viewport transform

    x_w = (w/2) x_n + x + w/2
    y_w = (h/2) y_n + y + h/2

Pixel (0,0) is the top-left corner and rows grow downward, so a world point
above the optical axis lands on a smaller row index. Camera space follows the
usual right-handed convention with the view direction on -z; "depth" in this
module always means distance in front of the camera in meters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GeometryError, ValidationError
from .geometry import (
    IDENTITY_QUAT,
    cross3,
    ensure_unit_quaternion,
    quat_multiply,
    quat_rotate,
)

__all__ = [
    "CameraPose",
    "Intrinsics",
    "Viewport",
    "CameraModel",
    "ProjectedPoint",
    "quat_rotate",
    "target_vector",
    "up_vector",
    "view_matrix",
    "projection_matrix",
    "ndc_to_window",
    "project_point",
]

X_FORWARD = (1.0, 0.0, 0.0)
Z_UP = (0.0, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class CameraPose:
    """Position in the world frame plus the body-to-world unit quaternion."""

    position: np.ndarray
    quaternion: np.ndarray

    def __post_init__(self):
        position = np.asarray(self.position, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(position)):
            raise ValidationError("camera position must be finite")
        quaternion = ensure_unit_quaternion(self.quaternion)
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "quaternion", quaternion)


@dataclass(frozen=True)
class Intrinsics:
    """Calibrated pinhole parameters in pixels, plus clip distances in meters."""

    fx: float
    fy: float
    cx: float
    cy: float
    near: float = 0.05
    far: float = 50.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValidationError("focal lengths must be positive")
        if not 0 < self.near < self.far:
            raise ValidationError("clip distances must satisfy 0 < near < far")


@dataclass(frozen=True)
class Viewport:
    width: int
    height: int
    x: int = 0
    y: int = 0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("viewport dimensions must be positive")
        if self.x < 0 or self.y < 0:
            raise ValidationError("viewport offsets must be non-negative")


class ProjectedPoint(NamedTuple):
    pixel: np.ndarray  # (x_w, y_w), reported even when off-screen
    depth: float       # meters in front of the camera (negative = behind)
    in_front: bool


def target_vector(pose: CameraPose, forward_axis=X_FORWARD) -> np.ndarray:
    """Look-at target point: position + rotated body forward axis."""
    return pose.position + quat_rotate(pose.quaternion, forward_axis)


def up_vector(pose: CameraPose, up_axis=Z_UP) -> np.ndarray:
    """Up point: position + rotated body up axis."""
    return pose.position + quat_rotate(pose.quaternion, up_axis)


def view_matrix(eye, target, up_point) -> np.ndarray:
    """Right-handed look-at transform (world -> camera space, view along -z).

    `up_point` is a point, not a direction; the up direction is up_point - eye.
    """
    eye = np.asarray(eye, dtype=np.float64).reshape(3)
    target = np.asarray(target, dtype=np.float64).reshape(3)
    up_point = np.asarray(up_point, dtype=np.float64).reshape(3)
    gaze = target - eye
    if float(np.linalg.norm(gaze)) < 1e-12:
        raise GeometryError("look-at target coincides with the eye")
    forward = gaze / np.linalg.norm(gaze)
    side = cross3(forward, up_point - eye)
    if float(np.linalg.norm(side)) < 1e-9:
        raise GeometryError("up direction is parallel to the view direction")
    side = side / np.linalg.norm(side)
    up = cross3(side, forward)
    view = np.eye(4)
    view[0, :3] = side
    view[1, :3] = up
    view[2, :3] = -forward
    view[0, 3] = -side @ eye
    view[1, 3] = -up @ eye
    view[2, 3] = forward @ eye
    return view


def projection_matrix(intr: Intrinsics, vp: Viewport) -> np.ndarray:
    """Perspective projection reproducing the pinhole mapping after the
    viewport transform: u = fx X/Z + cx, v = cy - fy Y/Z (rows grow downward).

    Depth maps [near, far] onto the canonical [-1, 1] clip range.
    """
    w, h = float(vp.width), float(vp.height)
    near, far = intr.near, intr.far
    proj = np.zeros((4, 4))
    proj[0, 0] = 2.0 * intr.fx / w
    proj[0, 2] = -(2.0 * intr.cx - w) / w
    proj[1, 1] = -2.0 * intr.fy / h
    proj[1, 2] = -(2.0 * intr.cy - h) / h
    proj[2, 2] = -(far + near) / (far - near)
    proj[2, 3] = -2.0 * far * near / (far - near)
    proj[3, 2] = -1.0
    return proj


def ndc_to_window(x_n: float, y_n: float, vp: Viewport) -> tuple[float, float]:
    """Viewport transform; inputs outside [-1, 1] map off-screen."""
    x_w = 0.5 * vp.width * x_n + vp.x + 0.5 * vp.width
    y_w = 0.5 * vp.height * y_n + vp.y + 0.5 * vp.height
    return x_w, y_w


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pose + intrinsics + viewport; the single source of projection truth.

    `forward_axis`/`up_axis` fix which body axes the camera looks along
    (defaults: x forward, z up). `mount_rotation`/`mount_translation` apply a
    fixed body-frame camera mounting offset (default identity).
    """

    pose: CameraPose
    intrinsics: Intrinsics
    viewport: Viewport
    forward_axis: np.ndarray = X_FORWARD
    up_axis: np.ndarray = Z_UP
    mount_rotation: np.ndarray = IDENTITY_QUAT
    mount_translation: np.ndarray = (0.0, 0.0, 0.0)

    def __post_init__(self):
        forward = np.asarray(self.forward_axis, dtype=np.float64).reshape(3)
        up = np.asarray(self.up_axis, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(forward) - 1.0) > 1e-9 or abs(np.linalg.norm(up) - 1.0) > 1e-9:
            raise ValidationError("camera body axes must be unit vectors")
        if abs(float(forward @ up)) > 1e-6:
            raise ValidationError("camera forward and up axes must be orthogonal")
        mount_q = ensure_unit_quaternion(self.mount_rotation)
        mount_t = np.asarray(self.mount_translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "forward_axis", forward)
        object.__setattr__(self, "up_axis", up)
        object.__setattr__(self, "mount_rotation", mount_q)
        object.__setattr__(self, "mount_translation", mount_t)
        # matrices are computed eagerly: instances stay immutable and
        # lock-free for parallel use
        object.__setattr__(self, "effective_pose", self._compose_mount())
        object.__setattr__(
            self,
            "view",
            view_matrix(
                self.effective_pose.position,
                target_vector(self.effective_pose, self.forward_axis),
                up_vector(self.effective_pose, self.up_axis),
            ),
        )
        object.__setattr__(self, "projection", projection_matrix(self.intrinsics, self.viewport))

    def _compose_mount(self) -> CameraPose:
        """Drone pose composed with the camera mounting offset."""
        if (
            np.array_equal(self.mount_rotation, np.array(IDENTITY_QUAT))
            and not self.mount_translation.any()
        ):
            return self.pose
        position = self.pose.position + quat_rotate(self.pose.quaternion, self.mount_translation)
        quaternion = quat_multiply(self.pose.quaternion, self.mount_rotation)
        quaternion = quaternion / np.linalg.norm(quaternion)
        return CameraPose(position, quaternion)

    @property
    def eye(self) -> np.ndarray:
        return self.effective_pose.position

    def forward_world(self) -> np.ndarray:
        pose = self.effective_pose
        return quat_rotate(pose.quaternion, self.forward_axis)


def project_point(cam: CameraModel, point) -> ProjectedPoint:
    """Project a world point through view -> projection -> divide -> viewport.

    The pixel is reported even when the point is off-screen or behind the
    camera (in which case in_front is False and the pixel is mirrored).
    """
    point = np.asarray(point, dtype=np.float64).reshape(3)
    cam_pt = cam.view[:3, :3] @ point + cam.view[:3, 3]
    depth = -cam_pt[2]
    if abs(depth) < 1e-12:
        if float(np.linalg.norm(point - cam.eye)) < 1e-12:
            raise GeometryError("cannot project the eye point")
        raise GeometryError("point lies exactly in the eye plane")
    clip = cam.projection @ np.array([cam_pt[0], cam_pt[1], cam_pt[2], 1.0])
    ndc_x, ndc_y = clip[0] / clip[3], clip[1] / clip[3]
    x_w, y_w = ndc_to_window(ndc_x, ndc_y, cam.viewport)
    return ProjectedPoint(np.array([x_w, y_w]), float(depth), depth > 0.0)
