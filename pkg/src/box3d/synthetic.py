"""Synthetic scene generation: the projection oracle behind the solver and
depuration test suites.

Objects are sampled in 3D, their exact 2D boxes computed by projecting all
eight corners and taking extremes, the bottom-face-center projection taken
exactly, the viewpoint labeled geometrically, and the local yaw encoded into
the discrete-bin representation; configured noise is applied afterwards.
Generation is deterministic under a fixed seed.
"""

import math
from dataclasses import dataclass

import numpy as np

from .camera import Box2D, Box3D, CameraIntrinsics, Detection2D, Dimensions, box_vertices, project_point
from .kitti_io import FrameRecord, ObjectLabel, PropertyRecord
from .properties import (
    CAR_PRIOR,
    RegressedProperties,
    alpha_from_local,
    default_bin_centers,
    encode_cbf,
    encode_local_angle,
    local_from_global,
)
from .viewpoints import away_from_viewpoint_boundaries, classify_viewpoint

# KITTI-like default camera
DEFAULT_CAMERA = CameraIntrinsics(fu=721.5377, fv=721.5377, cu=609.5593, cv=172.854)
DEFAULT_IMAGE_SIZE = (1242, 375)


@dataclass(frozen=True)
class SyntheticSceneSpec:
    """Sampling ranges and noise levels for one generated frame."""

    n_objects_min: int = 1
    n_objects_max: int = 4
    depth_min: float = 5.0
    depth_max: float = 60.0
    lateral_min: float = -20.0
    lateral_max: float = 20.0
    yaw_min: float = -math.pi
    yaw_max: float = math.pi
    dims_sigma: float = 0.0
    box_noise_sigma: float = 0.0
    cbf_noise_sigma: float = 0.0
    angle_noise_sigma: float = 0.0
    seed: int = 0
    # scene geometry and sampling guards
    camera_fu: float = DEFAULT_CAMERA.fu
    camera_fv: float = DEFAULT_CAMERA.fv
    camera_cu: float = DEFAULT_CAMERA.cu
    camera_cv: float = DEFAULT_CAMERA.cv
    image_width: float = DEFAULT_IMAGE_SIZE[0]
    image_height: float = DEFAULT_IMAGE_SIZE[1]
    camera_height: float = 1.65  # bottom-face Y of sampled objects
    in_image_margin_px: float = 15.0
    boundary_margin_deg: float = 2.0
    n_bins: int = 2
    allow_truncated: bool = False
    allow_boundary_poses: bool = False
    # non-occluding layouts: no 2D overlap and no 3D interpenetration,
    # the regime the depuration adjacency rule assumes for clean scenes
    overlap_free: bool = False

    def __post_init__(self):
        if self.n_objects_min < 1 or self.n_objects_max < self.n_objects_min:
            raise ValueError("object count range empty")
        if self.depth_max < self.depth_min or self.lateral_max < self.lateral_min:
            raise ValueError("sampling range empty")
        for sigma in (self.dims_sigma, self.box_noise_sigma, self.cbf_noise_sigma, self.angle_noise_sigma):
            if sigma < 0:
                raise ValueError("noise sigma must be non-negative")

    @property
    def camera(self) -> CameraIntrinsics:
        return CameraIntrinsics(self.camera_fu, self.camera_fv, self.camera_cu, self.camera_cv)

    @property
    def image_size(self):
        return (self.image_width, self.image_height)


def exact_box2d(b: Box3D, k: CameraIntrinsics) -> Box2D:
    """Tight 2D box: hull extremes of the eight projected corners."""
    uv = np.stack([project_point(k, p) for p in box_vertices(b)])
    return Box2D(
        float(uv[:, 0].min()), float(uv[:, 1].min()),
        float(uv[:, 0].max()), float(uv[:, 1].max()),
    )


def clip_box2d(box: Box2D, image_size) -> Box2D:
    w, h = image_size
    return Box2D(
        min(max(box.u_min, 0.0), w), min(max(box.v_min, 0.0), h),
        min(max(box.u_max, 0.0), w), min(max(box.v_max, 0.0), h),
    )


def _sample_box3d(spec: SyntheticSceneSpec, rng) -> Box3D:
    prior = CAR_PRIOR.mean_dims
    while True:
        jitter = rng.normal(0.0, spec.dims_sigma, 3) if spec.dims_sigma > 0 else np.zeros(3)
        h, w, l = prior.h + jitter[0], prior.w + jitter[1], prior.l + jitter[2]
        if min(h, w, l) > 0.1:
            dims = Dimensions(h, w, l)
            break
    location = np.array([
        rng.uniform(spec.lateral_min, spec.lateral_max),
        spec.camera_height,
        rng.uniform(spec.depth_min, spec.depth_max),
    ])
    yaw = rng.uniform(spec.yaw_min, spec.yaw_max)
    return Box3D(location, dims, yaw)


def _boxes_overlap(a: Box2D, b: Box2D) -> bool:
    return (
        min(a.u_max, b.u_max) > max(a.u_min, b.u_min)
        and min(a.v_max, b.v_max) > max(a.v_min, b.v_min)
    )


def _acceptable(b: Box3D, spec: SyntheticSceneSpec, placed) -> bool:
    k = spec.camera
    verts = box_vertices(b)
    if np.any(verts[:, 2] <= 0.5):
        return False
    box = exact_box2d(b, k)
    if not spec.allow_truncated:
        m = spec.in_image_margin_px
        if not (box.u_min > m and box.v_min > m
                and box.u_max < spec.image_width - m and box.v_max < spec.image_height - m):
            return False
    if not spec.allow_boundary_poses:
        if not away_from_viewpoint_boundaries(b, math.radians(spec.boundary_margin_deg)):
            return False
    if spec.overlap_free:
        for other_box, other in placed:
            if _boxes_overlap(box, other_box):
                return False
            reach = 0.5 * (math.hypot(b.dims.l, b.dims.w) + math.hypot(other.dims.l, other.dims.w))
            if math.hypot(b.location[0] - other.location[0], b.location[2] - other.location[2]) < reach:
                return False
    return True


def generate_scene(spec: SyntheticSceneSpec, frame_id: str = "000000"):
    """One synthetic frame: (ground-truth FrameRecord, detections, properties).

    The ground-truth labels carry the exact (clipped) 2D boxes; the returned
    detections and property record carry the configured noise.
    """
    rng = np.random.default_rng(spec.seed)
    k = spec.camera
    centers = default_bin_centers(spec.n_bins)

    n = int(rng.integers(spec.n_objects_min, spec.n_objects_max + 1))
    gt_objects, detections, props = [], [], []
    placed = []
    for _ in range(n):
        for _attempt in range(10_000):
            b = _sample_box3d(spec, rng)
            if _acceptable(b, spec, placed):
                break
        else:
            raise RuntimeError("could not sample an acceptable pose; loosen the spec ranges")

        box = clip_box2d(exact_box2d(b, k), spec.image_size)
        placed.append((box, b))
        cbf = tuple(project_point(k, b.location))
        theta_ray = math.atan2(b.location[2], b.location[0])
        theta_l = local_from_global(b.yaw, theta_ray)
        viewpoint = classify_viewpoint(b, k)

        gt_objects.append(
            ObjectLabel(
                cls=CAR_PRIOR.name, truncated=0.0, occluded=0,
                alpha=alpha_from_local(theta_l), box2d=box, dims=b.dims,
                location=b.location.copy(), yaw=b.yaw,
            )
        )

        noisy_box = box
        if spec.box_noise_sigma > 0:
            du0, dv0, du1, dv1 = rng.normal(0.0, spec.box_noise_sigma, 4)
            noisy_box = clip_box2d(
                Box2D(box.u_min + du0, box.v_min + dv0, box.u_max + du1, box.v_max + dv1),
                spec.image_size,
            )
        noisy_cbf = cbf
        if spec.cbf_noise_sigma > 0:
            noise = rng.normal(0.0, spec.cbf_noise_sigma, 2)
            noisy_cbf = (cbf[0] + noise[0], cbf[1] + noise[1])
        noisy_theta_l = theta_l
        if spec.angle_noise_sigma > 0:
            noisy_theta_l = theta_l + rng.normal(0.0, spec.angle_noise_sigma)

        detections.append(Detection2D(noisy_box, float(rng.uniform(0.5, 1.0)), CAR_PRIOR.name))
        prior = CAR_PRIOR.mean_dims
        props.append(
            RegressedProperties(
                dim_residual=(b.dims.h - prior.h, b.dims.w - prior.w, b.dims.l - prior.l),
                multibin=encode_local_angle(noisy_theta_l, centers),
                viewpoint_class=viewpoint,
                cbf_offset=encode_cbf(noisy_cbf, noisy_box),
            )
        )

    return (
        FrameRecord(frame_id, gt_objects, camera=k),
        detections,
        PropertyRecord(frame_id, props),
    )
