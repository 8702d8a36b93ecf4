"""Single-joint kinematics: joint models, joint motion, screw decomposition."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from artictwin.services.geometry.enums import JointType
from artictwin.services.geometry.so3 import rotate_about, rotation_log
from artictwin.services.geometry.transforms import RigidTransform

REVOLUTE_DEGENERATE_ANGLE = 1e-6     # radians
PRISMATIC_DEGENERATE_DISTANCE = 1e-9  # meters
_UNIT_TOL = 1e-9


def _unit(v: Sequence[float]) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(3)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0:
        raise ValueError("axis must be a finite non-zero vector")
    return v / n


def closest_point_to_origin(axis: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Point on the line {point + λ axis} nearest the origin (axis unit)."""
    point = np.asarray(point, dtype=np.float64)
    return point - (point @ axis) * axis


def point_line_distance(points: np.ndarray, axis: np.ndarray, pivot: np.ndarray) -> np.ndarray:
    """Distance of each point to the infinite line through `pivot` along unit `axis`."""
    rel = np.atleast_2d(points) - pivot
    along = rel @ axis
    return np.linalg.norm(rel - along[:, None] * axis, axis=1)


def line_line_distance(a1: np.ndarray, p1: np.ndarray, a2: np.ndarray, p2: np.ndarray) -> float:
    """Minimum distance between two infinite lines (unit directions a1, a2)."""
    n = np.cross(a1, a2)
    nn = np.linalg.norm(n)
    d = p2 - p1
    if nn < 1e-12:
        # parallel lines
        return float(np.linalg.norm(d - (d @ a1) * a1))
    return float(abs(d @ n) / nn)


@dataclass(frozen=True, eq=False)
class JointModel:
    """One articulation joint: type, unit axis, pivot (revolute only)."""

    joint_type: JointType
    axis: np.ndarray
    pivot: np.ndarray

    def __post_init__(self) -> None:
        axis = np.array(self.axis, dtype=np.float64).reshape(3)
        pivot = np.array(self.pivot if self.pivot is not None else np.zeros(3), dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(axis) - 1.0) > _UNIT_TOL:
            raise ValueError(f"joint axis must be unit length, got |axis|={np.linalg.norm(axis)}")
        if not np.all(np.isfinite(pivot)):
            raise ValueError("pivot must be finite")
        axis.flags.writeable = False
        pivot.flags.writeable = False
        object.__setattr__(self, "joint_type", JointType(self.joint_type))
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "pivot", pivot)

    @classmethod
    def create(
        cls,
        joint_type: JointType | str,
        axis: Sequence[float],
        pivot: Optional[Sequence[float]] = None,
    ) -> JointModel:
        """Normalising constructor; the pivot is canonicalised for revolute joints."""
        jt = JointType(joint_type)
        a = _unit(axis)
        p = np.zeros(3) if pivot is None or jt is JointType.PRISMATIC else closest_point_to_origin(a, pivot)
        return cls(jt, a, p)

    @property
    def is_revolute(self) -> bool:
        return self.joint_type is JointType.REVOLUTE

    def flipped(self) -> JointModel:
        """Same physical joint with the axis direction reversed (states change sign)."""
        return JointModel(self.joint_type, -self.axis, self.pivot)

    def to_vector(self) -> np.ndarray:
        """7-vector encoding: type flag, axis, pivot."""
        return np.concatenate([[self.joint_type.flag], self.axis, self.pivot])

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> JointModel:
        v = np.asarray(vec, dtype=np.float64)
        if v.shape != (7,):
            raise ValueError("joint vector must have 7 entries")
        return cls.create(JointType.from_flag(v[0]), v[1:4], v[4:7])

    def to_dict(self) -> dict:
        return {
            "joint_type": self.joint_type.value,
            "axis": self.axis.tolist(),
            "pivot": self.pivot.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> JointModel:
        return cls.create(data["joint_type"], data["axis"], data.get("pivot"))

    def __repr__(self) -> str:
        return f"JointModel({self.joint_type.value}, axis={self.axis.tolist()}, pivot={self.pivot.tolist()})"


@dataclass(frozen=True, eq=False)
class JointStateSequence:
    """Per-frame joint states; frame 0 is the canonical state."""

    states: np.ndarray

    def __post_init__(self) -> None:
        s = np.array(self.states, dtype=np.float64).reshape(-1)
        if len(s) == 0 or s[0] != 0.0:
            raise ValueError("joint state sequence must start at 0")
        s.flags.writeable = False
        object.__setattr__(self, "states", s)

    def __len__(self) -> int:
        return len(self.states)

    def negated(self) -> JointStateSequence:
        return JointStateSequence(-self.states + 0.0)


# ── operations ────────────────────────────────────────────────────────────────

def apply_joint(joint: JointModel, state: float) -> RigidTransform:
    """Rigid motion of the movable part at joint state `state`."""
    if joint.joint_type is JointType.PRISMATIC:
        return RigidTransform(np.eye(3), state * joint.axis)
    R = rotate_about(joint.axis, state)
    return RigidTransform(R, joint.pivot - R @ joint.pivot)


@dataclass(frozen=True)
class RevoluteScrew:
    axis: np.ndarray
    pivot: np.ndarray
    angle: float
    slide: float  # translation along the axis, ignored by revolute joints


@dataclass(frozen=True)
class PrismaticScrew:
    axis: np.ndarray
    distance: float


@dataclass(frozen=True)
class ScrewDecomposition:
    revolute: Optional[RevoluteScrew]
    prismatic: Optional[PrismaticScrew]

    def for_hypothesis(self, joint_type: JointType) -> Optional[RevoluteScrew | PrismaticScrew]:
        return self.revolute if joint_type is JointType.REVOLUTE else self.prismatic

    def joint(self, joint_type: JointType) -> Optional[tuple[JointModel, float]]:
        """Joint model and state delta under one hypothesis, or None if degenerate."""
        if joint_type is JointType.REVOLUTE:
            if self.revolute is None:
                return None
            r = self.revolute
            return JointModel(JointType.REVOLUTE, r.axis, r.pivot), r.angle
        if self.prismatic is None:
            return None
        p = self.prismatic
        return JointModel(JointType.PRISMATIC, p.axis, np.zeros(3)), p.distance


def screw_decompose(T: RigidTransform) -> ScrewDecomposition:
    """Extract revolute and prismatic joint hypotheses from one rigid motion.

    Revolute: rotation axis/angle, pivot = point on the axis line nearest the
    origin solving (I - R) p = t_perp. Prismatic: normalised translation.
    Either branch is None when degenerate.
    """
    R, t = T.rotation, T.translation

    revolute = None
    rotvec = rotation_log(R)
    angle = float(np.linalg.norm(rotvec))
    if angle >= REVOLUTE_DEGENERATE_ANGLE:
        axis = rotvec / angle
        slide = float(t @ axis)
        t_perp = t - slide * axis
        A = np.vstack([np.eye(3) - R, axis[None, :]])
        b = np.concatenate([t_perp, [0.0]])
        pivot, *_ = np.linalg.lstsq(A, b, rcond=None)
        pivot = closest_point_to_origin(axis, pivot)
        revolute = RevoluteScrew(axis=axis, pivot=pivot, angle=angle, slide=slide)

    prismatic = None
    dist = float(np.linalg.norm(t))
    if dist >= PRISMATIC_DEGENERATE_DISTANCE:
        prismatic = PrismaticScrew(axis=t / dist, distance=dist)

    return ScrewDecomposition(revolute=revolute, prismatic=prismatic)
