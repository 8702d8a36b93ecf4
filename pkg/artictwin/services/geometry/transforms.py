"""SE(3) rigid transforms and weighted rigid alignment."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from artictwin.services.errors import DegenerateConfiguration
from artictwin.services.geometry.so3 import geodesic_angle, polar_project

logger = logging.getLogger(__name__)

_ORTHONORMAL_TOL = 1e-9
_REPROJECT_EVERY = 100      # compositions between polar re-projections
_RANK_TOL = 1e-10           # relative singular value below which a direction is lost


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Element of SE(3): x -> rotation @ x + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        R = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise ValueError("RigidTransform entries must be finite")
        if np.abs(R.T @ R - np.eye(3)).max() > _ORTHONORMAL_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > _ORTHONORMAL_TOL:
            raise ValueError("rotation has det != +1")
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    # ── construction ──────────────────────────────────────────────────────────

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_translation(cls, translation: Sequence[float]) -> RigidTransform:
        return cls(np.eye(3), np.asarray(translation, dtype=np.float64))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, project: bool = False) -> RigidTransform:
        """Build from a 4x4 (or 3x4) matrix; `project` snaps a drifted rotation back onto SO(3)."""
        m = np.asarray(matrix, dtype=np.float64)
        R = m[:3, :3]
        if project:
            R = polar_project(R)
        return cls(R, m[:3, 3])

    # ── algebra ───────────────────────────────────────────────────────────────

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) array (or a single 3-vector)."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def compose(self, other: RigidTransform) -> RigidTransform:
        """self ∘ other: apply `other` first."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other: RigidTransform) -> RigidTransform:
        return self.compose(other)

    def inverse(self) -> RigidTransform:
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def orthonormalized(self) -> RigidTransform:
        return RigidTransform(polar_project(self.rotation), self.translation)

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    # ── comparison ────────────────────────────────────────────────────────────

    def rotation_error(self, other: RigidTransform) -> float:
        return geodesic_angle(self.rotation, other.rotation)

    def translation_error(self, other: RigidTransform) -> float:
        return float(np.linalg.norm(self.translation - other.translation))

    def to_list(self) -> list[list[float]]:
        return self.as_matrix()[:3].tolist()

    def __repr__(self) -> str:
        return f"RigidTransform(R={self.rotation.tolist()}, t={self.translation.tolist()})"


def compose_chain(transforms: Iterable[RigidTransform]) -> list[RigidTransform]:
    """Running products T0, T0∘T1, T0∘T1∘T2, ... with periodic re-projection."""
    out: list[RigidTransform] = []
    acc: RigidTransform | None = None
    for i, T in enumerate(transforms):
        acc = T if acc is None else acc.compose(T)
        if i and i % _REPROJECT_EVERY == 0:
            acc = acc.orthonormalized()
        out.append(acc)
    return out


def fit_rigid_transform(
    src: np.ndarray,
    dst: np.ndarray,
    weights: np.ndarray | None = None,
) -> RigidTransform:
    """Weighted least-squares rigid alignment (Kabsch/Umeyama without scale).

    Returns T minimising sum_i w_i |T src_i - dst_i|^2 for index-matched
    (N, 3) arrays. Raises DegenerateConfiguration when fewer than three
    points carry weight or the weighted source set is collinear.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValueError(f"expected matching (N, 3) arrays, got {src.shape} and {dst.shape}")
    w = np.ones(len(src)) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (len(src),):
        raise ValueError("weights must have one entry per correspondence")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")

    if np.count_nonzero(w > 0) < 3:
        raise DegenerateConfiguration(f"need >= 3 weighted points, got {np.count_nonzero(w > 0)}")

    w = w / w.sum()
    mu_src = w @ src
    mu_dst = w @ dst
    a = src - mu_src
    b = dst - mu_dst

    cov = (a * w[:, None]).T @ a
    s_cov = np.linalg.svd(cov, compute_uv=False)
    if s_cov[0] <= 0 or s_cov[1] <= _RANK_TOL * s_cov[0]:
        raise DegenerateConfiguration("weighted source points are collinear")

    H = (a * w[:, None]).T @ b
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    if d == 0:
        d = 1.0
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    t = mu_dst - R @ mu_src
    return RigidTransform(R, t)
