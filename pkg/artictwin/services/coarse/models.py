"""Coarse-stage records: labeled matches, per-pair fits and the CoarseEstimate."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field

from artictwin.services.geometry import JointModel, JointStateSequence, JointType, RigidTransform, apply_joint

COARSE_SCHEMA_VERSION = 2


class MatchRegion(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"
    MIXED = "mixed"  # endpoints disagree; used by neither estimator


@dataclass(frozen=True, eq=False)
class LabeledMatches:
    """Valid correspondences of one frame pair, camera-frame points and region labels.

    `pos_a` / `pos_b` are positions in the (subsampled) video; rows are sorted
    by (idx_a, idx_b, confidence) so results do not depend on input order.
    """

    pos_a: int
    pos_b: int
    idx_a: np.ndarray
    idx_b: np.ndarray
    points_a: np.ndarray
    points_b: np.ndarray
    confidence: np.ndarray
    region: np.ndarray  # MatchRegion values as str

    def __len__(self) -> int:
        return len(self.idx_a)

    def select(self, mask: np.ndarray) -> LabeledMatches:
        return LabeledMatches(
            self.pos_a, self.pos_b,
            self.idx_a[mask], self.idx_b[mask],
            self.points_a[mask], self.points_b[mask],
            self.confidence[mask], self.region[mask],
        )

    def confident(self, threshold: float) -> LabeledMatches:
        return self.select(self.confidence > threshold)

    def in_region(self, region: MatchRegion) -> LabeledMatches:
        return self.select(self.region == region.value)


@dataclass(frozen=True)
class JointMotion:
    """One pair's motion under a hypothesis: joint (unit axis) and state delta."""

    joint: JointModel
    delta: float

    @property
    def transform(self) -> RigidTransform:
        return apply_joint(self.joint, self.delta)

    def flipped(self) -> JointMotion:
        return JointMotion(self.joint.flipped(), -self.delta)


# ── serialisable records ─────────────────────────────────────────────────────

class HypothesisFit(BaseModel):
    axis: List[float]
    pivot: List[float]
    delta: float
    residual: float        # mean inlier residual, meters
    cost: float            # mean truncated residual over all matches, meters
    inliers: int

    def motion(self, joint_type: JointType) -> JointMotion:
        return JointMotion(JointModel.create(joint_type, self.axis, self.pivot), self.delta)


class PairResult(BaseModel):
    pos_a: int
    pos_b: int
    frame_a: int
    frame_b: int
    matches: int = 0
    static_matches: int = 0
    dynamic_matches: int = 0
    revolute: Optional[HypothesisFit] = None
    prismatic: Optional[HypothesisFit] = None
    vote: Optional[JointType] = None
    skipped: Optional[str] = None

    def fit_for(self, joint_type: JointType) -> Optional[HypothesisFit]:
        return self.revolute if joint_type is JointType.REVOLUTE else self.prismatic


class JointCandidate(BaseModel):
    joint_type: JointType
    axis: List[float]
    pivot: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    votes: int = Field(default=0, ge=0)
    mean_residual: float = 0.0  # mean over contributing pairs, meters
    states: List[float]

    def joint(self) -> JointModel:
        return JointModel.create(self.joint_type, self.axis, self.pivot)

    def state_sequence(self) -> JointStateSequence:
        return JointStateSequence(np.asarray(self.states))


class CoarseEstimate(BaseModel):
    schema_version: int = COARSE_SCHEMA_VERSION
    frame_ids: List[int]
    cameras: List[List[List[float]]]  # world-from-camera 3x4 per frame
    voted_type: JointType
    revolute: Optional[JointCandidate] = None
    prismatic: Optional[JointCandidate] = None
    pairs: List[PairResult] = Field(default_factory=list)

    def camera_transforms(self) -> list[RigidTransform]:
        return [RigidTransform.from_matrix(np.asarray(m), project=True) for m in self.cameras]

    def candidate(self, joint_type: JointType) -> Optional[JointCandidate]:
        return self.revolute if joint_type is JointType.REVOLUTE else self.prismatic
