"""Geometric lifting of 2D detections into 3D boxes, with depuration and
evaluation metrics."""

from .camera import (
    BehindCameraError,
    Box2D,
    Box3D,
    CameraIntrinsics,
    Detection2D,
    Dimensions,
    back_project,
    box_vertices,
    project_point,
    ray_angle,
    wrap_angle,
    yaw_rotation,
)
from .depuration import DepurationConfig, Verdict, depurate
from .metrics import aos_and_os, average_precision, dimension_error, iou_3d, match_frame, orientation_similarity
from .properties import (
    CAR_PRIOR,
    ClassPrior,
    MultiBinOutput,
    RegressedProperties,
    decode_cbf,
    decode_dimensions,
    decode_local_angle,
    encode_local_angle,
    global_from_local,
    local_from_global,
)
from .solver import SolveInput, SolveReport, SolverConfig, gauss_newton_refine, initial_location, is_truncated, solve_cascaded
from .synthetic import SyntheticSceneSpec, generate_scene
from .viewpoints import classify_viewpoint, extremal_vertices, selection_matrices

__version__ = "0.1.0"
