"""Software rasterizer producing color, coverage, and depth buffers.

Triangles are sampled at pixel centers (col + 0.5, row + 0.5) with the
top-left fill rule for shared edges, z-tested against a float depth buffer
holding camera-space meters (+inf where empty), and flat-shaded with a single
directional light. Depth is interpolated perspective-correctly (linear in
1/z). Ties in depth keep the first-drawn fragment, so draw order only matters
for exactly coincident surfaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, floor

import numpy as np

from .camera import CameraModel, Viewport, ndc_to_window
from .geometry import cross3, yaw_quat
from .mesh import transform_mesh
from .scene import GateInstance

DEFAULT_LIGHT_DIR = np.array([3.0, 2.0, -6.0]) / 7.0  # unit by construction
DEFAULT_AMBIENT = 0.35


@dataclass(eq=False)
class FrameBuffers:
    """Color (uint8), coverage in [0,1], and depth in meters; same dimensions."""

    color: np.ndarray
    coverage: np.ndarray
    depth: np.ndarray

    @classmethod
    def empty(cls, vp: Viewport) -> "FrameBuffers":
        shape = (vp.height, vp.width)
        return cls(
            color=np.zeros(shape + (3,), dtype=np.uint8),
            coverage=np.zeros(shape, dtype=np.float32),
            depth=np.full(shape, np.inf, dtype=np.float32),
        )


def _edge(ax, ay, bx, by, px, py):
    return (px - ax) * (by - ay) - (py - ay) * (bx - ax)


def _accept(e, ax, ay, bx, by):
    # top-left rule for a positively oriented triangle in y-down pixel space:
    # a "left" edge goes down the screen, a "top" edge is horizontal going left
    dy = by - ay
    dx = bx - ax
    if dy > 0 or (dy == 0 and dx < 0):
        return e >= 0
    return e > 0


def rasterize_triangle(fb: FrameBuffers, v0, v1, v2, color,
                       origin: tuple[float, float] = (0.0, 0.0)) -> FrameBuffers:
    """Draw one triangle given as (x_w, y_w, depth) vertices.

    `origin` is the window coordinate of the buffer's top-left pixel corner
    (the viewport offset). Degenerate or fully clipped triangles are no-ops.
    """
    x0, y0, z0 = float(v0[0]), float(v0[1]), float(v0[2])
    x1, y1, z1 = float(v1[0]), float(v1[1]), float(v1[2])
    x2, y2, z2 = float(v2[0]), float(v2[1]), float(v2[2])
    area2 = _edge(x0, y0, x1, y1, x2, y2)
    if area2 == 0.0:
        return fb
    if area2 < 0.0:
        x1, y1, z1, x2, y2, z2 = x2, y2, z2, x1, y1, z1
        area2 = -area2

    height, width = fb.depth.shape
    ox, oy = origin
    c0 = max(0, floor(min(x0, x1, x2) - ox - 0.5))
    c1 = min(width - 1, ceil(max(x0, x1, x2) - ox - 0.5))
    r0 = max(0, floor(min(y0, y1, y2) - oy - 0.5))
    r1 = min(height - 1, ceil(max(y0, y1, y2) - oy - 0.5))
    if c1 < c0 or r1 < r0:
        return fb

    px = ox + np.arange(c0, c1 + 1) + 0.5
    py = oy + np.arange(r0, r1 + 1) + 0.5
    grid_x, grid_y = np.meshgrid(px, py)
    e0 = _edge(x1, y1, x2, y2, grid_x, grid_y)
    e1 = _edge(x2, y2, x0, y0, grid_x, grid_y)
    e2 = _edge(x0, y0, x1, y1, grid_x, grid_y)
    inside = (
        _accept(e0, x1, y1, x2, y2)
        & _accept(e1, x2, y2, x0, y0)
        & _accept(e2, x0, y0, x1, y1)
    )
    if not inside.any():
        return fb

    inv_z = (e0 / z0 + e1 / z1 + e2 / z2) / area2
    valid = inside & (inv_z > 0.0)
    if not valid.any():
        return fb
    with np.errstate(divide="ignore"):
        z = np.where(valid, 1.0 / np.where(inv_z > 0, inv_z, 1.0), np.inf)

    depth_view = fb.depth[r0 : r1 + 1, c0 : c1 + 1]
    hit = valid & (z < depth_view)
    if not hit.any():
        return fb
    depth_view[hit] = z[hit].astype(np.float32)
    fb.coverage[r0 : r1 + 1, c0 : c1 + 1][hit] = 1.0
    fb.color[r0 : r1 + 1, c0 : c1 + 1][hit] = np.asarray(color, dtype=np.uint8)
    return fb


def _clip_near(triangle: list[np.ndarray], near: float) -> list[np.ndarray]:
    """Sutherland-Hodgman clip of a camera-space triangle against depth=near."""
    signed = [-v[2] - near for v in triangle]
    out: list[np.ndarray] = []
    for i in range(3):
        a, b = triangle[i], triangle[(i + 1) % 3]
        da, db = signed[i], signed[(i + 1) % 3]
        if da >= 0.0:
            out.append(a)
        if (da >= 0.0) != (db >= 0.0):
            t = da / (da - db)
            out.append(a + t * (b - a))
    return out


def _shade(base_color: np.ndarray, normal: np.ndarray,
           light_dir: np.ndarray, ambient: float) -> np.ndarray:
    # two-sided flat shading: gates are visible from either face
    intensity = ambient + (1.0 - ambient) * abs(float(normal @ light_dir))
    return np.clip(np.rint(base_color.astype(np.float64) * intensity), 0, 255).astype(np.uint8)


def render_scene(cam: CameraModel, gates: list[GateInstance],
                 light_dir=DEFAULT_LIGHT_DIR, ambient: float = DEFAULT_AMBIENT) -> FrameBuffers:
    """Rasterize every gate mesh from the matched camera.

    Meshes are transformed to world space, viewed, near-plane clipped,
    projected, and depth-tested. Background pixels keep coverage 0.
    """
    fb = FrameBuffers.empty(cam.viewport)
    view = cam.view
    proj = cam.projection
    vp = cam.viewport
    near = cam.intrinsics.near
    light = np.asarray(light_dir, dtype=np.float64)

    for gate in gates:
        world = transform_mesh(gate.spec.mesh, yaw_quat(gate.yaw), gate.position)
        verts_world = world.vertices
        verts_cam = verts_world @ view[:3, :3].T + view[:3, 3]
        for face_idx, (a, b, c) in enumerate(world.faces):
            edge1 = verts_world[b] - verts_world[a]
            edge2 = verts_world[c] - verts_world[a]
            normal = cross3(edge1, edge2)
            norm = float(np.linalg.norm(normal))
            if norm < 1e-12:
                continue
            color = _shade(world.face_colors[face_idx], normal / norm, light, ambient)
            poly = _clip_near([verts_cam[a], verts_cam[b], verts_cam[c]], near)
            if len(poly) < 3:
                continue
            projected = []
            for v in poly:
                clip = proj @ np.array([v[0], v[1], v[2], 1.0])
                x_w, y_w = ndc_to_window(clip[0] / clip[3], clip[1] / clip[3], vp)
                projected.append((x_w, y_w, -v[2]))
            for k in range(1, len(projected) - 1):
                rasterize_triangle(fb, projected[0], projected[k], projected[k + 1],
                                   color, origin=(vp.x, vp.y))
    return fb
