"""Semi-synthetic drone-racing gate imagery: generation, metrics, guidance sim."""

from .augment import BlurPolicy, add_gaussian_noise, blur_score, composite, convolve, default_blur_policy, select_kernel
from .camera import (
    CameraModel,
    CameraPose,
    Intrinsics,
    Viewport,
    ndc_to_window,
    project_point,
    projection_matrix,
    quat_rotate,
    target_vector,
    up_vector,
    view_matrix,
)
from .dataset import (
    AnnotatedSample,
    BackgroundRecord,
    DatasetManifest,
    PipelineConfig,
    crop_to_bbox,
    generate_dataset,
    generate_sample,
    load_backgrounds,
    read_manifest,
    write_dataset,
)
from .errors import (
    ConfigError,
    GateSimError,
    GeometryError,
    IngestionError,
    ParseError,
    PlacementError,
    ValidationError,
)
from .mesh import GateSpec, Mesh, frame_gate_spec, frame_mesh, load_gate_spec, parse_obj, serialize_obj, transform_mesh
from .metrics import Detection, GroundTruth, distance_report, evaluate_detections, iou
from .render import FrameBuffers, rasterize_triangle, render_scene
from .scene import (
    CATEGORY_NAMES,
    GateAnnotation,
    GateInstance,
    SceneConfig,
    annotate_scene,
    sample_gate_poses,
    select_target,
    visible_corner_count,
)
from .seeding import derive_seed

__version__ = "0.1.0"
