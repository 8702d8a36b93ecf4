"""Refinement state: parameters, moving vector, unit layout and results."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import expit

from artictwin.services.geometry import JointModel, JointStateSequence, JointType, RigidTransform
from artictwin.services.geometry.so3 import rodrigues

REFINE_SCHEMA_VERSION = 1

PARAMETER_NAMES = ("camera", "axis", "pivot", "states", "logits")


class UnitMode(str, Enum):
    SEGMENTS = "segments"  # one moving probability per tracked segment
    PIXELS = "pixels"      # one per valid pixel per frame (no part tracks)


@dataclass(frozen=True)
class MovingVector:
    """Per-unit logits; probabilities are sigmoid(logits) in (0, 1)."""

    logits: np.ndarray
    unit_ids: Optional[np.ndarray] = None  # segment ids in segment mode

    @property
    def probabilities(self) -> np.ndarray:
        return expit(self.logits)

    def __len__(self) -> int:
        return len(self.logits)


@dataclass(frozen=True, eq=False)
class UnitLayout:
    """Which moving-vector unit each pixel of each frame belongs to (-1 = excluded).

    Excluded pixels (invalid depth, no tracked segment, newly observed segment)
    contribute to neither loss term and read 0 in the moving map.
    """

    mode: UnitMode
    unit_index: np.ndarray  # (T, H*W) int64
    unit_count: int
    height: int
    width: int
    unit_ids: Optional[np.ndarray] = None  # segment id per unit (segment mode)
    newly_observed: tuple[int, ...] = ()

    def moving_maps(self, probabilities: np.ndarray) -> np.ndarray:
        """(T, H, W) soft map: each pixel takes its unit's probability."""
        out = np.zeros(self.unit_index.shape)
        inside = self.unit_index >= 0
        out[inside] = probabilities[self.unit_index[inside]]
        return np.clip(out, 0.0, 1.0).reshape(-1, self.height, self.width)


@dataclass
class RefineParams:
    """Optimisation variables.

    camera: (T, 6) axis-angle increment and translation left-composed onto the
    initial pose (row 0 frozen); axis: unnormalised 3-vector; pivot: 3-vector
    (frozen for prismatic); states: (T,) with states[0] frozen at 0;
    logits: (D,) moving-vector logits.
    """

    camera: np.ndarray
    axis: np.ndarray
    pivot: np.ndarray
    states: np.ndarray
    logits: np.ndarray

    def as_dict(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMETER_NAMES}

    @classmethod
    def from_dict(cls, data: Dict[str, np.ndarray]) -> RefineParams:
        return cls(**{name: np.array(data[name], dtype=np.float64) for name in PARAMETER_NAMES})

    def copy(self) -> RefineParams:
        return RefineParams.from_dict(self.as_dict())

    @property
    def unit_axis(self) -> np.ndarray:
        return self.axis / np.linalg.norm(self.axis)


def composed_cameras(params: RefineParams, base: list[RigidTransform]) -> list[RigidTransform]:
    """World-from-camera poses exp(omega_t) ∘ base_t (+ tau_t)."""
    out = []
    for inc, C0 in zip(params.camera, base):
        R = rodrigues(inc[:3])
        out.append(RigidTransform(R @ C0.rotation, R @ C0.translation + inc[3:]).orthonormalized())
    return out


@dataclass(frozen=True)
class LossRecord:
    iteration: int
    static: float
    dynamic: float

    @property
    def total(self) -> float:
        return self.static + self.dynamic


@dataclass(eq=False)
class RefineState:
    """Parameters of one hypothesis plus everything needed to interpret them."""

    hypothesis: JointType
    params: RefineParams
    base_cameras: list[RigidTransform]
    layout: UnitLayout
    loss_history: list[LossRecord] = field(default_factory=list)
    final_loss: Optional[LossRecord] = None

    @property
    def joint(self) -> JointModel:
        return JointModel.create(self.hypothesis, self.params.axis, self.params.pivot)

    @property
    def state_sequence(self) -> JointStateSequence:
        s = self.params.states.copy()
        s[0] = 0.0
        return JointStateSequence(s)

    @property
    def cameras(self) -> list[RigidTransform]:
        return composed_cameras(self.params, self.base_cameras)

    @property
    def moving_vector(self) -> MovingVector:
        return MovingVector(self.params.logits.copy(), self.layout.unit_ids)

    def moving_maps(self) -> np.ndarray:
        return self.layout.moving_maps(self.moving_vector.probabilities)

    @property
    def loss(self) -> float:
        if self.final_loss is not None:
            return self.final_loss.total
        return self.loss_history[-1].total if self.loss_history else float("inf")


# ── serialisable records ─────────────────────────────────────────────────────

class HypothesisResult(BaseModel):
    hypothesis: JointType
    joint: Dict[str, object]
    states: List[float]
    cameras: List[List[List[float]]]
    unit_mode: UnitMode
    unit_ids: Optional[List[int]] = None
    probabilities: List[float]
    final_loss: float
    final_static: float
    final_dynamic: float
    iterations: int

    @classmethod
    def from_state(cls, state: RefineState) -> HypothesisResult:
        final = state.final_loss or (state.loss_history[-1] if state.loss_history else LossRecord(0, 0.0, 0.0))
        return cls(
            hypothesis=state.hypothesis,
            joint=state.joint.to_dict(),
            states=state.state_sequence.states.tolist(),
            cameras=[c.to_list() for c in state.cameras],
            unit_mode=state.layout.mode,
            unit_ids=None if state.layout.unit_ids is None else [int(i) for i in state.layout.unit_ids],
            probabilities=state.moving_vector.probabilities.tolist(),
            final_loss=final.total,
            final_static=final.static,
            final_dynamic=final.dynamic,
            iterations=len(state.loss_history),
        )


class RefineReport(BaseModel):
    schema_version: int = REFINE_SCHEMA_VERSION
    frame_ids: List[int]
    selected: JointType
    selection_reason: str
    axis_surface_distance: Optional[float] = None
    hypotheses: List[HypothesisResult] = Field(default_factory=list)
    newly_observed: List[int] = Field(default_factory=list)

    def result_for(self, joint_type: JointType) -> Optional[HypothesisResult]:
        for h in self.hypotheses:
            if h.hypothesis is joint_type:
                return h
        return None
