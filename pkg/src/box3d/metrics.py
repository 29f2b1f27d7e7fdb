"""Evaluation metrics: rotated 3D IoU, AP / AOS / OS, and dimension error.

AP follows the interpolated protocol at a configurable recall grid
(11 points {0.0, 0.1, ..., 1.0} by default, 40-point variant available).
Matching is greedy in descending score, each ground truth consumable once,
a detection is a true positive when its best 3D IoU clears the threshold.
"""

import math
from dataclasses import dataclass

import numpy as np

from .camera import Box3D

RECALL_POINTS_11 = tuple(np.linspace(0.0, 1.0, 11))
RECALL_POINTS_40 = tuple(np.linspace(1.0 / 40.0, 1.0, 40))


# ---------------------------------------------------------------------------
# rotated 3D IoU


def bev_corners(b: Box3D) -> np.ndarray:
    """Ground-plane (x, z) corners of a box, counterclockwise, shape (4, 2)."""
    c, s = math.cos(b.yaw), math.sin(b.yaw)
    hl, hw = 0.5 * b.dims.l, 0.5 * b.dims.w
    corners = []
    for ox, oz in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)):
        corners.append(
            (b.location[0] + ox * c + oz * s, b.location[2] - ox * s + oz * c)
        )
    return np.array(corners)


def _clip_polygon(subject, cx1, cz1, cx2, cz2):
    # keep the half plane to the left of the directed edge (cx1,cz1)->(cx2,cz2)
    ex, ez = cx2 - cx1, cz2 - cz1

    def side(p):
        return ex * (p[1] - cz1) - ez * (p[0] - cx1)

    out = []
    n = len(subject)
    for i in range(n):
        cur, nxt = subject[i], subject[(i + 1) % n]
        sc, sn = side(cur), side(nxt)
        if sc >= 0:
            out.append(cur)
        if (sc > 0 and sn < 0) or (sc < 0 and sn > 0):
            t = sc / (sc - sn)
            out.append((cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])))
    return out


def _polygon_area(poly) -> float:
    if len(poly) < 3:
        return 0.0
    area = 0.0
    n = len(poly)
    for i in range(n):
        x0, z0 = poly[i]
        x1, z1 = poly[(i + 1) % n]
        area += x0 * z1 - x1 * z0
    return 0.5 * abs(area)


def bev_intersection_area(a: Box3D, b: Box3D) -> float:
    """Area of the intersection of the two ground-plane rectangles
    (sequential half-plane clipping of convex polygons)."""
    subject = [tuple(p) for p in bev_corners(a)]
    clip = bev_corners(b)
    for i in range(4):
        if len(subject) < 3:
            return 0.0
        x1, z1 = clip[i]
        x2, z2 = clip[(i + 1) % 4]
        subject = _clip_polygon(subject, x1, z1, x2, z2)
    return _polygon_area(subject)


def iou_3d(a: Box3D, b: Box3D) -> float:
    """Volume IoU of two yaw-rotated boxes: BEV polygon intersection times
    vertical overlap, over the union volume."""
    # y points down: a box spans [y - h, y]
    overlap_y = min(a.location[1], b.location[1]) - max(
        a.location[1] - a.dims.h, b.location[1] - b.dims.h
    )
    if overlap_y <= 0:
        return 0.0
    inter = bev_intersection_area(a, b) * overlap_y
    if inter <= 0:
        return 0.0
    vol_a = a.dims.h * a.dims.w * a.dims.l
    vol_b = b.dims.h * b.dims.w * b.dims.l
    return inter / (vol_a + vol_b - inter)


def orientation_similarity(theta_det: float, theta_gt: float) -> float:
    """Normalized cosine similarity of two yaw angles, in [0, 1]."""
    return 0.5 * (1.0 + math.cos(theta_det - theta_gt))


# ---------------------------------------------------------------------------
# matching and ranked metrics


@dataclass(frozen=True)
class MatchedDetection:
    """One scored detection after matching against a frame's ground truth."""

    score: float
    is_tp: bool
    orientation_sim: float  # 0.0 for false positives
    iou3d: float


@dataclass(frozen=True)
class PRCurve:
    recalls: tuple
    precisions: tuple

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.recalls, self.recalls[1:])):
            raise ValueError("recall points must be strictly increasing")


def match_frame(detections, ground_truths, iou_threshold: float):
    """Greedy match of one frame.

    detections: iterable of (Box3D, score); ground_truths: iterable of Box3D.
    Returns a list of MatchedDetection (every detection appears, matched or
    not) to be pooled across frames.
    """
    order = sorted(range(len(detections)), key=lambda i: -detections[i][1])
    used = [False] * len(ground_truths)
    out = []
    for i in order:
        box, score = detections[i]
        best_iou, best_j = 0.0, -1
        for j, gt in enumerate(ground_truths):
            if used[j]:
                continue
            iou = iou_3d(box, gt)
            if iou > best_iou:
                best_iou, best_j = iou, j
        if best_j >= 0 and best_iou >= iou_threshold:
            used[best_j] = True
            out.append(
                MatchedDetection(
                    score, True, orientation_similarity(box.yaw, ground_truths[best_j].yaw), best_iou
                )
            )
        else:
            out.append(MatchedDetection(score, False, 0.0, best_iou))
    return out


def _ranked_curves(matches, n_gt):
    ranked = sorted(matches, key=lambda m: -m.score)
    tp = 0
    sim = 0.0
    recalls, precisions, sims = [], [], []
    for rank, m in enumerate(ranked, start=1):
        if m.is_tp:
            tp += 1
            sim += m.orientation_sim
        recalls.append(tp / n_gt if n_gt else 0.0)
        precisions.append(tp / rank)
        sims.append(sim / rank)
    return recalls, precisions, sims


def _interpolated_average(recalls, values, recall_points):
    total = 0.0
    for r in recall_points:
        best = 0.0
        for rec, val in zip(recalls, values):
            if rec >= r and val > best:
                best = val
        total += best
    return total / len(recall_points)


def average_precision(matches, n_gt: int, recall_points=RECALL_POINTS_11) -> float:
    """Interpolated AP: mean over the recall grid of the max precision at
    recall >= r."""
    if n_gt <= 0 or not matches:
        return 0.0
    recalls, precisions, _ = _ranked_curves(matches, n_gt)
    return _interpolated_average(recalls, precisions, recall_points)


def pr_curve(matches, n_gt: int, recall_points=RECALL_POINTS_11) -> PRCurve:
    """Interpolated precision sampled at the recall grid."""
    if n_gt <= 0 or not matches:
        return PRCurve(tuple(recall_points), tuple(0.0 for _ in recall_points))
    recalls, precisions, _ = _ranked_curves(matches, n_gt)
    interp = []
    for r in recall_points:
        interp.append(max((p for rec, p in zip(recalls, precisions) if rec >= r), default=0.0))
    return PRCurve(tuple(recall_points), tuple(interp))


def aos_and_os(matches, n_gt: int, recall_points=RECALL_POINTS_11):
    """Orientation-weighted AP and its ratio to plain AP.

    Each true positive contributes its orientation similarity instead of 1;
    OS = AOS/AP isolates orientation quality (0 when AP is 0).
    """
    if n_gt <= 0 or not matches:
        return 0.0, 0.0
    recalls, precisions, sims = _ranked_curves(matches, n_gt)
    ap = _interpolated_average(recalls, precisions, recall_points)
    aos = _interpolated_average(recalls, sims, recall_points)
    return aos, (aos / ap if ap > 0 else 0.0)


def dimension_error(detections, ground_truths) -> float:
    """Mean Euclidean (w, h, l) error of each detection against the ground
    truth closest by 3D center distance."""
    if not ground_truths:
        raise ValueError("no ground truth to match against")
    if not detections:
        return 0.0
    total = 0.0
    for det in detections:
        gt = min(ground_truths, key=lambda g: float(np.linalg.norm(g.location - det.location)))
        total += math.sqrt(
            (det.dims.w - gt.dims.w) ** 2
            + (det.dims.h - gt.dims.h) ** 2
            + (det.dims.l - gt.dims.l) ** 2
        )
    return total / len(detections)


# KITTI-style difficulty gates on (2D box height px, occlusion, truncation)
DIFFICULTY_THRESHOLDS = {
    "easy": (40.0, 0, 0.15),
    "moderate": (25.0, 1, 0.30),
    "hard": (25.0, 2, 0.50),
}


def passes_difficulty(box_height_px: float, occluded: int, truncated: float, level: str) -> bool:
    if level == "all":
        return True
    min_h, max_occ, max_trunc = DIFFICULTY_THRESHOLDS[level]
    return box_height_px >= min_h and occluded <= max_occ and truncated <= max_trunc
