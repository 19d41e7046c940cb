"""Top-level pipeline configuration document (JSON).

One file covers the camera intrinsics/viewport, the scene randomization
parameters with the gate specs, the blur policy, and the noise sigma. Gate
mesh filenames are resolved against a mesh directory supplied at load time.
"""

from __future__ import annotations

import json
from pathlib import Path

from .augment import BlurPolicy, line_kernel
from .camera import Intrinsics, Viewport
from .dataset import PipelineConfig
from .errors import ConfigError
from .geometry import IDENTITY_QUAT
from .mesh import load_gate_spec
from .scene import SceneConfig


def _require(section: dict, key: str, context: str):
    if key not in section:
        raise ConfigError(f"config missing field '{context}.{key}'")
    return section[key]


def _section(doc: dict, key: str) -> dict:
    if key not in doc:
        raise ConfigError(f"config missing section '{key}'")
    return doc[key]


def load_config(path: Path | str, mesh_dir: Path | str) -> PipelineConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc, mesh_dir)


def parse_config(doc: dict, mesh_dir: Path | str) -> PipelineConfig:
    intr = _section(doc, "intrinsics")
    intrinsics = Intrinsics(
        fx=float(_require(intr, "fx", "intrinsics")),
        fy=float(_require(intr, "fy", "intrinsics")),
        cx=float(_require(intr, "cx", "intrinsics")),
        cy=float(_require(intr, "cy", "intrinsics")),
        near=float(intr.get("near", 0.05)),
        far=float(intr.get("far", 50.0)),
    )
    vp = _section(doc, "viewport")
    viewport = Viewport(
        width=int(_require(vp, "width", "viewport")),
        height=int(_require(vp, "height", "viewport")),
        x=int(vp.get("x", 0)),
        y=int(vp.get("y", 0)),
    )

    scene_doc = _section(doc, "scene")
    bounds = _require(scene_doc, "bounds", "scene")
    gate_docs = _require(scene_doc, "gates", "scene")
    if not gate_docs:
        raise ConfigError("config field 'scene.gates' must list at least one gate")
    specs = tuple(load_gate_spec(g, mesh_dir) for g in gate_docs)
    scene = SceneConfig(
        max_gates=int(_require(scene_doc, "max_gates", "scene")),
        min_distance=float(_require(scene_doc, "min_distance", "scene")),
        bounds_min=_require(bounds, "min", "scene.bounds"),
        bounds_max=_require(bounds, "max", "scene.bounds"),
        specs=specs,
        yaw_range=tuple(scene_doc.get("yaw_range", (0.0, 6.283185307179586))),
        max_attempts=int(scene_doc.get("max_attempts", 100)),
    )

    blur_doc = doc.get("blur", {})
    thresholds = tuple(blur_doc.get("thresholds", (100.0, 300.0, 1000.0)))
    lengths = tuple(blur_doc.get("kernel_lengths", (5, 9, 13)))
    if len(lengths) != 3:
        raise ConfigError("config field 'blur.kernel_lengths' must list three lengths")
    blur = BlurPolicy(
        thresholds=thresholds,
        kernels=tuple(line_kernel(int(n)) for n in lengths),
        orient_to_background=bool(blur_doc.get("orient_to_background", True)),
    )

    mount = doc.get("camera_mount", {})
    return PipelineConfig(
        intrinsics=intrinsics,
        viewport=viewport,
        scene=scene,
        blur=blur,
        noise_sigma=float(doc.get("noise_sigma", 5.0)),
        mount_rotation=tuple(mount.get("rotation", IDENTITY_QUAT)),
        mount_translation=tuple(mount.get("translation", (0.0, 0.0, 0.0))),
    )


def config_snapshot(doc_path: Path | str) -> dict:
    """The raw config document, embedded into dataset manifests for replay."""
    return json.loads(Path(doc_path).read_text())
