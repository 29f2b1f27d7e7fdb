"""Cascaded 3D location estimation.

Stage one recovers a closed-form location from the projected bottom-face
center and the similar-triangle relation between the box height and its
projected height, (vc - v_min)/h = f/Z.  Stage two, skipped for truncated
detections, refines that location with Gauss-Newton on the four tight-fit
constraints tying the selected 3D corners to the 2D box edges.
"""

import math
from dataclasses import dataclass

import numpy as np

from .camera import (
    BehindCameraError,
    Box2D,
    CameraIntrinsics,
    Dimensions,
    back_project,
    yaw_rotation,
)
from .viewpoints import selected_offsets, selection_matrices


@dataclass(frozen=True)
class SolverConfig:
    """Refinement tolerances; all overridable from key-value config files."""

    max_iterations: int = 100
    step_tol: float = 1e-6          # meters, on the accepted step norm
    residual_change_tol: float = 1e-9  # pixels, on the residual-norm change
    fd_step: float = 1e-5           # meters, central-difference half step
    damping: float = 1e-9           # Tikhonov lambda added on singular normal eqs
    max_halvings: int = 10
    truncation_margin_px: float = 10.0


DEFAULT_SOLVER_CONFIG = SolverConfig()


@dataclass
class SolveInput:
    """Everything the location solve needs for one detection."""

    box2d: Box2D
    dims: Dimensions
    global_yaw: float
    viewpoint: int
    cbf: tuple  # (u, v) projection of the bottom-face center
    camera: CameraIntrinsics
    image_size: tuple  # (width, height) pixels

    def __post_init__(self):
        if not (self.box2d.u_min < self.box2d.u_max and self.box2d.v_min < self.box2d.v_max):
            raise ValueError(f"malformed 2D box {self.box2d}")


@dataclass
class SolveReport:
    location: np.ndarray
    used_refinement: bool
    iterations: int
    final_residual_norm: float
    converged: bool


def initial_location(cbf, v_min: float, h: float, k: CameraIntrinsics) -> np.ndarray:
    """Closed-form bottom-face center from the similar-triangle depth.

    Z = fv*h/(vc - v_min); lateral/vertical components by back-projecting
    the bottom-face-center pixel at that depth.  The vertical focal length
    carries the triangle since the projected height is vertical.
    """
    if h <= 0:
        raise ValueError(f"height must be positive, got {h}")
    dv = cbf[1] - v_min
    if dv <= 0:
        raise ValueError(
            f"degenerate projected height: bottom-center v {cbf[1]} not below box top {v_min}"
        )
    return back_project(k, cbf, k.fv * h / dv)


def _prepared(inp: SolveInput):
    offsets = selected_offsets(selection_matrices(inp.viewpoint), inp.dims)
    rotated = offsets @ yaw_rotation(inp.global_yaw).T  # (4, 3) camera-frame offsets
    targets = np.array([inp.box2d.u_min, inp.box2d.u_max, inp.box2d.v_min, inp.box2d.v_max])
    return rotated, targets


def _residuals(t, rotated, targets, k: CameraIntrinsics):
    verts = rotated + t
    z = verts[:, 2]
    if np.any(z <= 0.0):
        raise BehindCameraError("selected corner behind camera during solve")
    proj = np.empty(4)
    proj[0] = k.cu + k.fu * verts[0, 0] / z[0]
    proj[1] = k.cu + k.fu * verts[1, 0] / z[1]
    proj[2] = k.cv + k.fv * verts[2, 1] / z[2]
    proj[3] = k.cv + k.fv * verts[3, 1] / z[3]
    return proj - targets


def fitting_residuals(t, inp: SolveInput) -> np.ndarray:
    """Tight-fit residuals [u_left, u_right, v_top, v_bottom] in pixels at
    candidate bottom-face center t."""
    rotated, targets = _prepared(inp)
    return _residuals(np.asarray(t, dtype=float), rotated, targets, inp.camera)


def _fd_jacobian(t, rotated, targets, k, step):
    J = np.empty((4, 3))
    for j in range(3):
        dt = np.zeros(3)
        dt[j] = step
        J[:, j] = (
            _residuals(t + dt, rotated, targets, k)
            - _residuals(t - dt, rotated, targets, k)
        ) / (2.0 * step)
    return J


def gauss_newton_refine(
    t0, inp: SolveInput, config: SolverConfig = DEFAULT_SOLVER_CONFIG
) -> SolveReport:
    """Refine a location on the over-determined tight-fit equations.

    Plain Gauss-Newton steps with step halving whenever the residual norm
    fails to decrease; on singular normal equations a lambda*I damping is
    tried once before giving up.  Any hard failure returns t0 unchanged with
    converged=False.
    """
    t0 = np.asarray(t0, dtype=float).reshape(3)
    rotated, targets = _prepared(inp)
    k = inp.camera

    def failure(iterations, rnorm=math.inf):
        return SolveReport(t0.copy(), True, iterations, rnorm, False)

    try:
        r = _residuals(t0, rotated, targets, k)
    except BehindCameraError:
        return failure(0)

    t = t0.copy()
    rnorm = float(np.linalg.norm(r))
    converged = False
    iterations = 0
    for _ in range(config.max_iterations):
        try:
            J = _fd_jacobian(t, rotated, targets, k, config.fd_step)
        except BehindCameraError:
            return failure(iterations, rnorm)
        H = J.T @ J
        g = J.T @ r
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            try:
                step = np.linalg.solve(H + config.damping * np.eye(3), g)
            except np.linalg.LinAlgError:
                return failure(iterations, rnorm)

        alpha = 1.0
        accepted = False
        for _ in range(config.max_halvings + 1):
            t_new = t - alpha * step
            try:
                r_new = _residuals(t_new, rotated, targets, k)
            except BehindCameraError:
                alpha *= 0.5
                continue
            rnorm_new = float(np.linalg.norm(r_new))
            if rnorm_new < rnorm:
                accepted = True
                break
            alpha *= 0.5
        iterations += 1
        if not accepted:
            # line search stalled: already at a local minimum of the residual
            converged = True
            break

        dt_norm = float(np.linalg.norm(alpha * step))
        change = rnorm - rnorm_new
        t, r, rnorm = t_new, r_new, rnorm_new
        if dt_norm < config.step_tol or change < config.residual_change_tol:
            converged = True
            break

    return SolveReport(t, True, iterations, rnorm, converged)


def is_truncated(
    box2d: Box2D, image_size, margin: float = DEFAULT_SOLVER_CONFIG.truncation_margin_px
) -> bool:
    """Whether any box edge lies within `margin` px of an image border
    (closed threshold: exactly at the margin counts as truncated)."""
    width, height = image_size
    return (
        box2d.u_min <= margin
        or box2d.v_min <= margin
        or box2d.u_max >= width - margin
        or box2d.v_max >= height - margin
    )


def solve_cascaded(inp: SolveInput, config: SolverConfig = DEFAULT_SOLVER_CONFIG) -> SolveReport:
    """Closed-form initialization, then tight-fit refinement unless the
    detection is truncated; refinement failure falls back to the
    initialization."""
    t0 = initial_location(inp.cbf, inp.box2d.v_min, inp.dims.h, inp.camera)
    if is_truncated(inp.box2d, inp.image_size, config.truncation_margin_px):
        return SolveReport(t0, False, 0, math.nan, True)
    return gauss_newton_refine(t0, inp, config)
