"""Canonical surface sampling and multi-view surface fusion (state 0)."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from artictwin.services.errors import EmptySurface
from artictwin.services.geometry import PointCloud, RigidTransform, voxel_deduplicate
from artictwin.services.observations import Intrinsics
from artictwin.services.synth.models import PartSpec, SceneSpec
from artictwin.services.synth.render import render_zbuffer, visible_by_depth_test

logger = logging.getLogger(__name__)

FACES_PER_PART = 6


@dataclass(frozen=True, eq=False)
class CanonicalSurface:
    """Every sampled surface point of the object at state 0."""

    points: np.ndarray       # (N, 3)
    part_labels: np.ndarray  # (N,) part id
    segment_ids: np.ndarray  # (N,) part_id * 6 + face
    spacing: np.ndarray      # (N,) sampling spacing of the owning part

    def __len__(self) -> int:
        return len(self.points)


def sample_cuboid(part: PartSpec) -> tuple[np.ndarray, np.ndarray]:
    """Regular grid on the six faces. Returns points and face index (2*axis + side)."""
    h = part.spacing
    center = np.asarray(part.center, dtype=np.float64)
    half = np.asarray(part.extent, dtype=np.float64) / 2.0
    pts, faces = [], []
    for k in range(3):
        i, j = [a for a in range(3) if a != k]
        n_i = max(1, int(np.ceil(2 * half[i] / h)))
        n_j = max(1, int(np.ceil(2 * half[j] / h)))
        gi = -half[i] + (np.arange(n_i) + 0.5) * (2 * half[i] / n_i)
        gj = -half[j] + (np.arange(n_j) + 0.5) * (2 * half[j] / n_j)
        GI, GJ = np.meshgrid(gi, gj, indexing="ij")
        for side, sign in enumerate((-1.0, 1.0)):
            face = np.empty((GI.size, 3))
            face[:, k] = sign * half[k]
            face[:, i] = GI.ravel()
            face[:, j] = GJ.ravel()
            pts.append(face + center)
            faces.append(np.full(GI.size, 2 * k + side, dtype=np.int64))
    return np.concatenate(pts), np.concatenate(faces)


def canonical_surface(spec: SceneSpec) -> CanonicalSurface:
    if not spec.parts:
        raise EmptySurface("scene has no parts")
    pts, labels, segs, spacing = [], [], [], []
    for part in spec.parts:
        p, f = sample_cuboid(part)
        pts.append(p)
        labels.append(np.full(len(p), part.part_id, dtype=np.int64))
        segs.append(part.part_id * FACES_PER_PART + f)
        spacing.append(np.full(len(p), part.spacing))
    points = np.concatenate(pts)
    # voxel-unique from the start so that fusion dedup never drops an observed point
    keep = voxel_deduplicate(points, spec.fusion_voxel)
    return CanonicalSurface(
        points=points[keep],
        part_labels=np.concatenate(labels)[keep],
        segment_ids=np.concatenate(segs)[keep],
        spacing=np.concatenate(spacing)[keep],
    )


def look_at(position: np.ndarray, target: np.ndarray) -> RigidTransform:
    """World-from-camera pose at `position` looking at `target` (z forward, y down)."""
    forward = target - position
    forward /= np.linalg.norm(forward)
    down = np.array([0.0, 1.0, 0.0])
    y = down - (down @ forward) * forward
    if np.linalg.norm(y) < 1e-9:
        y = np.array([0.0, 0.0, 1.0]) - forward[2] * forward
    y /= np.linalg.norm(y)
    x = np.cross(y, forward)
    return RigidTransform(np.column_stack([x, y, forward]), position)


def _object_frame(spec: SceneSpec) -> tuple[np.ndarray, float]:
    corners = []
    for part in spec.parts:
        c = np.asarray(part.center)
        half = np.asarray(part.extent) / 2.0
        for sx in (-1, 1):
            for sy in (-1, 1):
                for sz in (-1, 1):
                    corners.append(c + half * np.array([sx, sy, sz]))
    corners = np.array(corners)
    center = 0.5 * (corners.min(axis=0) + corners.max(axis=0))
    radius = float(np.linalg.norm(corners - center, axis=1).max())
    return center, radius


def fusion_viewpoints(spec: SceneSpec, count: Optional[int] = None) -> list[RigidTransform]:
    """Cameras on three elevation rings around the object, ring 0 facing the frame-0 camera."""
    count = spec.fusion_views if count is None else count
    center, radius = _object_frame(spec)
    distance = max(2.5 * radius, 1.0)

    back = -center / np.linalg.norm(center) if np.linalg.norm(center) > 1e-9 else np.array([0.0, 0.0, -1.0])
    up = np.array([0.0, -1.0, 0.0])
    up = up - (up @ back) * back
    up /= np.linalg.norm(up)
    side = np.cross(up, back)

    rows = 3 if count >= 3 else 1
    per_row = int(np.ceil(count / rows))
    elevations = np.deg2rad([0.0, 45.0, -45.0][:rows])
    views: list[RigidTransform] = []
    for el in elevations:
        for a in range(per_row):
            az = 2 * np.pi * a / per_row
            direction = np.cos(el) * (np.cos(az) * back + np.sin(az) * side) + np.sin(el) * up
            views.append(look_at(center + distance * direction, center))
    return views[:count]


def _fusion_camera(spec: SceneSpec, canonical: CanonicalSurface) -> tuple[Intrinsics, int]:
    center, radius = _object_frame(spec)
    distance = max(2.5 * radius, 1.0)
    f = 1.5 * distance / float(canonical.spacing.min())
    half = int(np.ceil(f * radius / (distance - radius))) + 2
    return Intrinsics(fx=f, fy=f, cx=float(half), cy=float(half)), 2 * half


def fused_indices(
    spec: SceneSpec,
    canonical: CanonicalSurface,
    views: Optional[Sequence[RigidTransform]] = None,
) -> np.ndarray:
    """Sorted canonical indices visible from at least one fusion view."""
    views = fusion_viewpoints(spec) if views is None else views
    intr, size = _fusion_camera(spec, canonical)
    tolerance = 2.0 * float(canonical.spacing.min())
    seen = np.zeros(len(canonical), dtype=bool)
    for pose in views:
        cam = pose.inverse().apply(canonical.points)
        zb = render_zbuffer(cam, canonical.spacing, intr, size, size)
        seen |= visible_by_depth_test(cam, zb, intr, tolerance)
    idx = np.nonzero(seen)[0]
    keep = voxel_deduplicate(canonical.points[idx], spec.fusion_voxel)
    return idx[keep]


def fuse_surface_cloud(
    spec: SceneSpec,
    views: Optional[Sequence[RigidTransform]] = None,
) -> PointCloud:
    """P^O: union of the fusion views at state 0, part-labelled, voxel-deduplicated."""
    canonical = canonical_surface(spec)
    idx = fused_indices(spec, canonical, views)
    logger.info(
        "synth.fuse views=%d canonical=%d fused=%d",
        spec.fusion_views if views is None else len(views), len(canonical), len(idx),
    )
    return PointCloud(canonical.points[idx], labels=canonical.part_labels[idx])
