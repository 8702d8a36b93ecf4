"""Pydantic models describing a synthetic articulated scene."""
from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from artictwin.services.geometry import JointModel, JointType
from artictwin.services.observations import Intrinsics

SCENE_SCHEMA_VERSION = 1


class PartSpec(BaseModel):
    """Axis-aligned cuboid part; density is surface points per square meter."""

    part_id: int = Field(ge=0)
    center: Tuple[float, float, float]
    extent: Tuple[float, float, float]
    density: float = Field(default=40000.0, gt=0)

    @field_validator("extent")
    @classmethod
    def _positive_extent(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if min(v) <= 0:
            raise ValueError("cuboid extents must be positive")
        return v

    @property
    def spacing(self) -> float:
        return 1.0 / float(np.sqrt(self.density))


class JointSpec(BaseModel):
    joint_type: JointType
    axis: Tuple[float, float, float]
    pivot: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def to_model(self) -> JointModel:
        return JointModel.create(self.joint_type, self.axis, self.pivot)


class SceneSpec(BaseModel):
    schema_version: int = SCENE_SCHEMA_VERSION
    seed: int = 0
    parts: List[PartSpec]
    movable_part: int
    joint: JointSpec
    states: List[float]

    height: int = Field(default=48, ge=4)
    width: int = Field(default=64, ge=4)
    intrinsics: Intrinsics = Intrinsics(fx=60.0, fy=60.0, cx=32.0, cy=24.0)

    retargeting: bool = True
    retarget_interval: Tuple[int, int] = (7, 10)
    camera_position_std: float = Field(default=0.03, ge=0)
    camera_rotation_std: float = Field(default=0.03, ge=0)

    point_noise_std: float = Field(default=0.0, ge=0)
    mask_corruption: float = Field(default=0.0, ge=0, le=1)
    outlier_rate: Optional[float] = Field(default=None, ge=0, le=1)  # None: same as mask_corruption

    fusion_views: int = Field(default=24, ge=1)
    fusion_voxel: float = Field(default=0.005, gt=0)
    target_frame_count: int = Field(default=20, ge=2)
    pair_window: int = Field(default=3, ge=1)

    @model_validator(mode="after")
    def _check_scene(self) -> "SceneSpec":
        if len(self.states) < 2:
            raise ValueError("a scene needs at least 2 frames")
        if self.states[0] != 0.0:
            raise ValueError("state schedule must start at 0")
        diffs = np.diff(self.states)
        if not (np.all(diffs >= 0) or np.all(diffs <= 0)):
            raise ValueError("state schedule must be monotone")
        ids = [p.part_id for p in self.parts]
        if len(set(ids)) != len(ids):
            raise ValueError("part ids must be unique")
        if ids and ids.count(self.movable_part) != 1:
            raise ValueError("exactly one part must be movable")
        lo, hi = self.retarget_interval
        if not 1 <= lo <= hi:
            raise ValueError("retarget interval must satisfy 1 <= min <= max")
        return self

    @property
    def frame_count(self) -> int:
        return len(self.states)

    @property
    def effective_outlier_rate(self) -> float:
        return self.mask_corruption if self.outlier_rate is None else self.outlier_rate

    @staticmethod
    def linear_schedule(final_state: float, frame_count: int) -> list[float]:
        return np.linspace(0.0, final_state, frame_count).tolist()
