"""
Observation records shared by every stage.

A Dataset is one video: per-frame organised point clouds, soft moving maps,
segment label maps, pixel correspondences and the fused surface cloud P^O.
Synthetic datasets additionally carry their GroundTruth.

Frames are addressed by their original video index (`frame_ids`); pixel
indices are flat row-major (v * W + u).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from artictwin.services.geometry import JointModel, JointStateSequence, PointCloud, RigidTransform


class Intrinsics(BaseModel):
    fx: float = Field(gt=0)
    fy: float = Field(gt=0)
    cx: float
    cy: float

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Pixel coordinates (u, v) of camera-frame points (z forward)."""
        z = points[:, 2]
        return self.fx * points[:, 0] / z + self.cx, self.fy * points[:, 1] / z + self.cy


@dataclass(frozen=True, eq=False)
class FrameObservation:
    """One time step: organised (H, W, 3) cloud in camera coordinates + validity."""

    frame_id: int
    points: np.ndarray
    valid: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if pts.ndim != 3 or pts.shape[2] != 3 or valid.shape != pts.shape[:2]:
            raise ValueError(f"frame {self.frame_id}: bad organised cloud shapes {pts.shape}, {valid.shape}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "valid", valid)

    @property
    def height(self) -> int:
        return self.points.shape[0]

    @property
    def width(self) -> int:
        return self.points.shape[1]

    @property
    def flat_points(self) -> np.ndarray:
        return self.points.reshape(-1, 3)

    @property
    def flat_valid(self) -> np.ndarray:
        return self.valid.reshape(-1)

    def valid_points(self) -> np.ndarray:
        return self.flat_points[self.flat_valid]


@dataclass(frozen=True, eq=False)
class SegmentTrack:
    """A part segment tracked through the video (per-frame binary masks)."""

    segment_id: int
    masks: np.ndarray  # (T, H, W) bool

    @property
    def present_in_frame0(self) -> bool:
        return bool(self.masks[0].any())

    @property
    def pixel_counts(self) -> np.ndarray:
        return self.masks.reshape(len(self.masks), -1).sum(axis=1)


def tracks_from_labels(segment_labels: np.ndarray) -> list[SegmentTrack]:
    """SegmentTracks from a (T, H, W) label stack (-1 = no segment), ordered by id."""
    ids = np.unique(segment_labels)
    return [SegmentTrack(int(i), segment_labels == i) for i in ids if i >= 0]


@dataclass(frozen=True, eq=False)
class CorrespondenceSet:
    """Pixel matches between frames `frame_a` and `frame_b` (original ids)."""

    frame_a: int
    frame_b: int
    idx_a: np.ndarray
    idx_b: np.ndarray
    confidence: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.idx_a, dtype=np.int64).reshape(-1)
        b = np.asarray(self.idx_b, dtype=np.int64).reshape(-1)
        c = np.asarray(self.confidence, dtype=np.float64).reshape(-1)
        if not (len(a) == len(b) == len(c)):
            raise ValueError("correspondence arrays must have equal length")
        object.__setattr__(self, "idx_a", a)
        object.__setattr__(self, "idx_b", b)
        object.__setattr__(self, "confidence", c)

    def __len__(self) -> int:
        return len(self.idx_a)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Synthetic ground truth for one video."""

    joint: JointModel
    states: JointStateSequence
    cameras: list[RigidTransform]       # world-from-camera; cameras[0] = identity
    moving_maps: np.ndarray             # (T, H, W) binary
    surface_labels: np.ndarray          # part id per P^O point
    movable_part: int
    canonical_points: np.ndarray        # every sampled surface point at state 0
    canonical_labels: np.ndarray

    @property
    def surface_movable(self) -> np.ndarray:
        return self.surface_labels == self.movable_part

    def select_frames(self, positions: Sequence[int]) -> GroundTruth:
        positions = list(positions)
        states = self.states.states[positions] - self.states.states[positions[0]]
        return replace(
            self,
            states=JointStateSequence(states),
            cameras=[self.cameras[i] for i in positions],
            moving_maps=self.moving_maps[positions],
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Everything the pipeline consumes for one video."""

    intrinsics: Intrinsics
    frames: list[FrameObservation]
    moving_maps: np.ndarray             # (T, H, W) float in [0, 1]
    segment_labels: np.ndarray          # (T, H, W) int, -1 = untracked
    correspondences: list[CorrespondenceSet]
    surface: PointCloud                 # P^O, frame-0 camera coordinates
    ground_truth: Optional[GroundTruth] = None
    name: str = "video"
    meta: dict = field(default_factory=dict)

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def frame_ids(self) -> list[int]:
        return [f.frame_id for f in self.frames]

    def tracks(self) -> list[SegmentTrack]:
        return tracks_from_labels(self.segment_labels)

    def position_of(self) -> dict[int, int]:
        """Original frame id -> position in this dataset."""
        return {fid: i for i, fid in enumerate(self.frame_ids)}

    def select_frames(self, positions: Sequence[int]) -> Dataset:
        """Sub-video on the given frame positions; correspondences are filtered to it."""
        positions = list(positions)
        if positions[0] != 0:
            raise ValueError("frame 0 must stay selected (it anchors P^O)")
        kept_ids = {self.frames[i].frame_id for i in positions}
        return replace(
            self,
            frames=[self.frames[i] for i in positions],
            moving_maps=self.moving_maps[positions],
            segment_labels=self.segment_labels[positions],
            correspondences=[
                c for c in self.correspondences if c.frame_a in kept_ids and c.frame_b in kept_ids
            ],
            ground_truth=None if self.ground_truth is None else self.ground_truth.select_frames(positions),
        )
