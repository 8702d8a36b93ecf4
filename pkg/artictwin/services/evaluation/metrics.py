"""Joint, geometry, moving-map and camera metrics.

Conventions (repeated in every report header):
  * axis error is the angle between undirected axis lines, in [0, pi/2];
  * position error is the distance between the two infinite axis lines
    (revolute ground truth only; a prismatic prediction scores 1.0);
  * state error is the mean absolute per-frame difference after the same
    axis flip that minimised the axis error;
  * a failed run scores pi/2 for axis and revolute state, 1.0 for the rest.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from artictwin.services.geometry import (
    JointModel,
    JointStateSequence,
    JointType,
    RigidTransform,
    line_line_distance,
    symmetric_chamfer,
)

FAILURE_AXIS_ERROR = np.pi / 2
FAILURE_REVOLUTE_STATE_ERROR = np.pi / 2
FAILURE_OTHER_ERROR = 1.0

CONVENTIONS = (
    "axis error: angle between undirected axis lines (rad, <= pi/2); "
    "position error: distance between infinite axis lines (m, revolute ground truth only, "
    "1.0 when a prismatic joint is predicted); "
    "state error: mean |s_pred - s_gt| after the axis flip minimising axis error; "
    "failure: pi/2 for axis and revolute state, 1.0 otherwise; "
    "geometry: symmetric Chamfer (mean of both one-directional terms, m)"
)


class JointMetrics(BaseModel):
    axis_error: float = Field(ge=0)
    position_error: Optional[float] = Field(default=None, ge=0)
    type_error: int = Field(ge=0, le=1)
    state_error: float = Field(ge=0)
    failure: bool = False


class GeometryMetrics(BaseModel):
    cd_whole: float = Field(ge=0)
    cd_movable: float = Field(ge=0)
    cd_static: float = Field(ge=0)


def axis_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Angle between undirected lines along unit vectors a and b."""
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)), abs(float(a @ b))))


def failure_joint_metrics(gt_type: JointType) -> JointMetrics:
    revolute = JointType(gt_type) is JointType.REVOLUTE
    return JointMetrics(
        axis_error=FAILURE_AXIS_ERROR,
        position_error=FAILURE_OTHER_ERROR if revolute else None,
        type_error=1,
        state_error=FAILURE_REVOLUTE_STATE_ERROR if revolute else FAILURE_OTHER_ERROR,
        failure=True,
    )


def joint_metrics(
    pred: Optional[JointModel],
    pred_states: Optional[JointStateSequence | Sequence[float]],
    gt: JointModel,
    gt_states: JointStateSequence | Sequence[float],
    failure: bool = False,
) -> JointMetrics:
    """Errors of a predicted joint and state sequence against ground truth."""
    if failure or pred is None or pred_states is None:
        return failure_joint_metrics(gt.joint_type)

    ps = np.asarray(getattr(pred_states, "states", pred_states), dtype=np.float64)
    gs = np.asarray(getattr(gt_states, "states", gt_states), dtype=np.float64)
    if ps.shape != gs.shape:
        raise ValueError(f"state sequences differ in length: {ps.shape} vs {gs.shape}")

    sign = -1.0 if float(pred.axis @ gt.axis) < 0 else 1.0
    position = None
    if gt.is_revolute:
        if pred.is_revolute:
            position = line_line_distance(pred.axis, pred.pivot, gt.axis, gt.pivot)
        else:
            position = FAILURE_OTHER_ERROR
    return JointMetrics(
        axis_error=axis_angle(pred.axis, gt.axis),
        position_error=position,
        type_error=int(pred.joint_type is not gt.joint_type),
        state_error=float(np.mean(np.abs(sign * ps - gs))),
    )


def _sample(points: np.ndarray, samples: Optional[int], rng: np.random.Generator) -> np.ndarray:
    if samples is None:
        return points
    return points[rng.choice(len(points), samples, replace=True)]


def geometry_metrics(
    pred_points: np.ndarray,
    pred_movable: np.ndarray,
    gt_points: np.ndarray,
    gt_movable: np.ndarray,
    samples: Optional[int] = 10000,
    seed: int = 0,
    workers: int = 1,
) -> GeometryMetrics:
    """CD-w / CD-m / CD-s; an empty part on either side scores 1.0.

    `samples=None` compares the full clouds without resampling.
    """
    pred_points = np.asarray(pred_points, dtype=np.float64)
    gt_points = np.asarray(gt_points, dtype=np.float64)
    pred_movable = np.asarray(pred_movable, dtype=bool)
    gt_movable = np.asarray(gt_movable, dtype=bool)
    rng = np.random.default_rng([seed, 5])

    def cd(pred_sel: np.ndarray, gt_sel: np.ndarray) -> float:
        p, g = pred_points[pred_sel], gt_points[gt_sel]
        if len(p) == 0 or len(g) == 0:
            return FAILURE_OTHER_ERROR
        return symmetric_chamfer(_sample(p, samples, rng), _sample(g, samples, rng), workers)

    return GeometryMetrics(
        cd_whole=cd(np.ones(len(pred_points), dtype=bool), np.ones(len(gt_points), dtype=bool)),
        cd_movable=cd(pred_movable, gt_movable),
        cd_static=cd(~pred_movable, ~gt_movable),
    )


def _iou(pred: np.ndarray, gt: np.ndarray) -> float:
    union = np.count_nonzero(pred | gt)
    if union == 0:
        return 1.0
    return np.count_nonzero(pred & gt) / union


def miou(pred_maps: np.ndarray, gt_maps: np.ndarray, threshold: float = 0.5) -> float:
    """Mean per-frame IoU of maps binarised at `threshold` (>=)."""
    pred_maps = np.asarray(pred_maps)
    gt_maps = np.asarray(gt_maps)
    if pred_maps.shape != gt_maps.shape:
        raise ValueError(f"map stacks differ: {pred_maps.shape} vs {gt_maps.shape}")
    return float(np.mean([_iou(p >= threshold, g >= threshold) for p, g in zip(pred_maps, gt_maps)]))


def partition_iou(pred_movable: np.ndarray, gt_movable: np.ndarray) -> float:
    """IoU of the predicted movable point set against ground-truth part labels."""
    return float(_iou(np.asarray(pred_movable, dtype=bool), np.asarray(gt_movable, dtype=bool)))


def camera_metrics(
    pred: Sequence[RigidTransform],
    gt: Sequence[RigidTransform],
) -> tuple[float, float]:
    """Mean geodesic rotation error (rad) and translation error (m) over frames."""
    if len(pred) != len(gt):
        raise ValueError(f"trajectories differ in length: {len(pred)} vs {len(gt)}")
    if not pred:
        return 0.0, 0.0
    rot = np.mean([p.rotation_error(g) for p, g in zip(pred, gt)])
    trans = np.mean([p.translation_error(g) for p, g in zip(pred, gt)])
    return float(rot), float(trans)
