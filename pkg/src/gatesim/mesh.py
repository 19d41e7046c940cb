"""Triangle meshes, gate descriptions, and rigid transforms.

Meshes carry 0-based vertex indices and use meters throughout. Appearance is
deliberately minimal: flat-shaded triangles with one RGB color per face, set
from the gate configuration rather than from material files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, ParseError, ValidationError
from .geometry import ensure_unit_quaternion, rotation_matrix

DEFAULT_FACE_COLOR = (232, 106, 52)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangle mesh: (N,3) float64 vertices, (M,3) int64 faces.

    `face_colors` is (M,3) uint8; passing None broadcasts DEFAULT_FACE_COLOR.
    Instances are safe to share read-only across parallel workers.
    """

    vertices: np.ndarray
    faces: np.ndarray
    face_colors: np.ndarray | None = None

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(faces) < 1:
            raise ValidationError("mesh must have at least one face")
        if not np.all(np.isfinite(vertices)):
            raise ValidationError("mesh vertices must be finite")
        if faces.min(initial=0) < 0 or faces.max(initial=-1) >= len(vertices):
            raise ValidationError(
                f"face index out of range for {len(vertices)} vertices"
            )
        colors = self.face_colors
        if colors is None:
            colors = np.tile(np.array(DEFAULT_FACE_COLOR, dtype=np.uint8), (len(faces), 1))
        else:
            colors = np.asarray(colors, dtype=np.uint8)
            if colors.shape == (3,):
                colors = np.tile(colors, (len(faces), 1))
            colors = colors.reshape(-1, 3)
            if len(colors) != len(faces):
                raise ValidationError("face_colors length must match face count")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "face_colors", colors)


@dataclass(frozen=True, eq=False)
class GateSpec:
    """A gate mesh plus the panel metadata used for targeting and annotation.

    width/height describe the gate aperture panel around `center_offset`
    (legs, if present in the mesh, are rendered but stay outside the panel
    bounding box). `normal_local` is the mesh-local "front" direction.
    """

    mesh: Mesh
    center_offset: np.ndarray
    width: float
    height: float
    normal_local: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("gate width and height must be positive")
        center = np.asarray(self.center_offset, dtype=np.float64).reshape(3)
        normal = np.asarray(self.normal_local, dtype=np.float64).reshape(3)
        norm = float(np.linalg.norm(normal))
        if norm < 1e-9:
            raise ValidationError("gate normal must be a nonzero vector")
        object.__setattr__(self, "center_offset", center)
        object.__setattr__(self, "normal_local", normal / norm)
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "height", float(self.height))


def parse_obj(source: str | Iterable[str], color=DEFAULT_FACE_COLOR) -> Mesh:
    """Parse a Wavefront-OBJ subset (v / f lines; n-gons fan-triangulated).

    Vertex normals, texture coordinates and material statements are ignored;
    every face gets `color`. Indices are converted to 0-based.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise ParseError("vertex line needs 3 coordinates", line=lineno)
            try:
                vertices.append([float(p) for p in parts[1:4]])
            except ValueError as exc:
                raise ParseError(f"bad vertex coordinate: {exc}", line=lineno) from exc
        elif parts[0] == "f":
            if len(parts) < 4:
                raise ParseError("face line needs at least 3 indices", line=lineno)
            try:
                idx = [int(p.split("/", 1)[0]) for p in parts[1:]]
            except ValueError as exc:
                raise ParseError(f"bad face index: {exc}", line=lineno) from exc
            for k in range(1, len(idx) - 1):
                faces.append((idx[0], idx[k], idx[k + 1]))
        # vn/vt/usemtl/mtllib/o/g/s and unknown statements are ignored
    if not vertices:
        raise ValidationError("OBJ document defines no vertices")
    if not faces:
        raise ValidationError("OBJ document defines no faces")
    face_arr = np.array(faces, dtype=np.int64)
    if face_arr.min() < 1 or face_arr.max() > len(vertices):
        bad = int(face_arr.min()) if face_arr.min() < 1 else int(face_arr.max())
        raise ValidationError(f"face index {bad} out of range 1..{len(vertices)}")
    return Mesh(np.array(vertices, dtype=np.float64), face_arr - 1, np.array(color, dtype=np.uint8))


def serialize_obj(mesh: Mesh) -> str:
    """Serialize to the same OBJ subset parse_obj reads (full float precision)."""
    out = []
    for x, y, z in mesh.vertices:
        out.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    for a, b, c in mesh.faces:
        out.append(f"f {a + 1} {b + 1} {c + 1}")
    return "\n".join(out) + "\n"


def transform_mesh(mesh: Mesh, rotation, translation) -> Mesh:
    """Apply the rigid transform v -> R(rotation) v + translation to every vertex."""
    q = ensure_unit_quaternion(rotation)
    rot = rotation_matrix(q)
    t = np.asarray(translation, dtype=np.float64).reshape(3)
    return Mesh(mesh.vertices @ rot.T + t, mesh.faces, mesh.face_colors)


def load_gate_spec(doc: Mapping, mesh_dir=".") -> GateSpec:
    """Build a GateSpec from a config mapping.

    Required keys: mesh (OBJ filename under mesh_dir), center, width, height,
    normal. Optional: color (RGB 0-255).
    """
    for key in ("mesh", "center", "width", "height", "normal"):
        if key not in doc:
            raise ConfigError(f"gate spec missing field '{key}'")
    mesh_path = Path(mesh_dir) / doc["mesh"]
    try:
        text = mesh_path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read mesh file {mesh_path}: {exc}") from exc
    color = tuple(doc.get("color", DEFAULT_FACE_COLOR))
    mesh = parse_obj(text, color=color)
    return GateSpec(
        mesh=mesh,
        center_offset=doc["center"],
        width=doc["width"],
        height=doc["height"],
        normal_local=doc["normal"],
    )


def _quad(y0: float, z0: float, y1: float, z1: float, verts: list, faces: list) -> None:
    base = len(verts)
    verts += [(0.0, y0, z0), (0.0, y1, z0), (0.0, y1, z1), (0.0, y0, z1)]
    faces += [(base, base + 1, base + 2), (base, base + 2, base + 3)]


def frame_mesh(width: float, height: float, bar: float, leg_length: float = 0.0,
               color=DEFAULT_FACE_COLOR) -> Mesh:
    """Flat rectangular gate frame in the y-z plane, centered at the origin.

    The frame outline spans width x height with bars of thickness `bar`;
    normal is +x. Optional legs extend below the frame and are meant to be
    rendered but excluded from the annotation panel.
    """
    if bar <= 0 or bar * 2 >= min(width, height):
        raise ValidationError("bar thickness must be positive and fit the frame")
    hw, hh = width / 2.0, height / 2.0
    verts: list = []
    faces: list = []
    _quad(-hw, hh - bar, hw, hh, verts, faces)            # top
    _quad(-hw, -hh, hw, -hh + bar, verts, faces)          # bottom
    _quad(-hw, -hh + bar, -hw + bar, hh - bar, verts, faces)  # left
    _quad(hw - bar, -hh + bar, hw, hh - bar, verts, faces)    # right
    if leg_length > 0:
        _quad(-hw, -hh - leg_length, -hw + bar, -hh, verts, faces)
        _quad(hw - bar, -hh - leg_length, hw, -hh, verts, faces)
    return Mesh(np.array(verts), np.array(faces), np.array(color, dtype=np.uint8))


def frame_gate_spec(width: float = 1.5, height: float = 1.5, bar: float = 0.15,
                    leg_length: float = 0.0, color=DEFAULT_FACE_COLOR) -> GateSpec:
    """GateSpec for a square frame gate (default 1.5 m x 1.5 m)."""
    return GateSpec(
        mesh=frame_mesh(width, height, bar, leg_length=leg_length, color=color),
        center_offset=(0.0, 0.0, 0.0),
        width=width,
        height=height,
        normal_local=(1.0, 0.0, 0.0),
    )
