"""
Synthetic scene generator: the oracle standing in for a simulator and the
pretrained front ends (moving maps, matcher, part tracker).

Conventions:
  * world = frame-0 camera coordinates; cameras are world-from-camera.
  * the movable part at frame t is apply_joint(joint, s_t) of its canonical points.
  * random streams are keyed by (seed, purpose, frame...) so frames can be
    produced in any order or in parallel with identical results.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from artictwin.services.coarse.frames import frame_pairs, subsample_frames
from artictwin.services.errors import EmptyFrame, EmptySurface
from artictwin.services.geometry import (
    JointModel,
    JointStateSequence,
    PointCloud,
    RigidTransform,
    apply_joint,
)
from artictwin.services.observations import (
    CorrespondenceSet,
    Dataset,
    FrameObservation,
    GroundTruth,
)
from artictwin.services.synth.camera import camera_trajectory
from artictwin.services.synth.models import SceneSpec
from artictwin.services.synth.render import render_zbuffer, visible_by_depth_test
from artictwin.services.synth.surface import FACES_PER_PART, CanonicalSurface, canonical_surface, fused_indices

logger = logging.getLogger(__name__)

SyntheticObservation = Dataset

_MOVING_EPS = 1e-6  # meters of displacement that count as motion


@dataclass(frozen=True, eq=False)
class _RenderedFrame:
    observation: FrameObservation
    point_index: np.ndarray   # (H, W) canonical index, -1 empty
    gt_map: np.ndarray
    observed_map: np.ndarray
    segment_labels: np.ndarray


def _posed_points(canonical: CanonicalSurface, movable: np.ndarray, joint: JointModel, state: float) -> np.ndarray:
    world = canonical.points.copy()
    world[movable] = apply_joint(joint, state).apply(canonical.points[movable])
    return world


def _render_frame(
    spec: SceneSpec,
    t: int,
    canonical: CanonicalSurface,
    movable: np.ndarray,
    joint: JointModel,
    camera: RigidTransform,
    segment_ids: np.ndarray,
) -> _RenderedFrame:
    rng = np.random.default_rng([spec.seed, 1, t])
    H, W = spec.height, spec.width
    world = _posed_points(canonical, movable, joint, spec.states[t])
    cam = camera.inverse().apply(world)
    zb = render_zbuffer(cam, canonical.spacing, spec.intrinsics, H, W)
    covered = zb.covered
    if not covered.any():
        raise EmptyFrame(t)

    idx = zb.point_index
    points = np.full((H, W, 3), np.nan)
    noise = rng.normal(0.0, spec.point_noise_std, (H, W, 3)) if spec.point_noise_std > 0 else 0.0
    points[covered] = (cam[idx[covered]] + (noise[covered] if spec.point_noise_std > 0 else 0.0))

    # motion relative to the previous frame (frame 0 looks ahead to frame 1)
    prev = t - 1 if t > 0 else 1
    other = _posed_points(canonical, movable, joint, spec.states[prev])
    moving_points = np.linalg.norm(world - other, axis=1) > _MOVING_EPS
    gt_map = np.zeros((H, W))
    hit = idx[covered]
    gt_map[covered] = (movable[hit] & moving_points[hit]).astype(np.float64)

    observed = gt_map.copy()
    if spec.mask_corruption > 0:
        flip = (rng.random((H, W)) < spec.mask_corruption) & covered
        observed[flip] = 1.0 - observed[flip]

    labels = np.full((H, W), -1, dtype=np.int64)
    labels[covered] = segment_ids[hit]

    return _RenderedFrame(
        observation=FrameObservation(frame_id=t, points=points, valid=covered),
        point_index=idx,
        gt_map=gt_map,
        observed_map=observed,
        segment_labels=labels,
    )


def tracked_segment_ids(
    spec: SceneSpec,
    canonical: CanonicalSurface,
    camera0: RigidTransform,
) -> np.ndarray:
    """Segment id per canonical point as a video part tracker would assign it.

    Geometry hidden in frame 0 gets its own id when it shows up later, so the
    segments it forms are absent from frame 0 (newly observed parts).
    """
    cam = camera0.inverse().apply(canonical.points)
    zb = render_zbuffer(cam, canonical.spacing, spec.intrinsics, spec.height, spec.width)
    seen = visible_by_depth_test(cam, zb, spec.intrinsics, 2.0 * float(canonical.spacing.min()))
    seen[zb.point_index[zb.covered]] = True
    revealed_offset = FACES_PER_PART * (max(p.part_id for p in spec.parts) + 1)
    return canonical.segment_ids + revealed_offset * (~seen).astype(np.int64)


def _first_pixels(point_index: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unique canonical ids seen in a frame and the first flat pixel showing each."""
    flat = point_index.reshape(-1)
    pix = np.nonzero(flat >= 0)[0]
    ids, first = np.unique(flat[pix], return_index=True)
    return ids, pix[first]


def _correspondences(
    spec: SceneSpec,
    a: int,
    b: int,
    frame_a: _RenderedFrame,
    frame_b: _RenderedFrame,
) -> CorrespondenceSet:
    rng = np.random.default_rng([spec.seed, 2, a, b])
    ids_a, pix_a = _first_pixels(frame_a.point_index)
    ids_b, pix_b = _first_pixels(frame_b.point_index)
    _, ia, ib = np.intersect1d(ids_a, ids_b, assume_unique=True, return_indices=True)
    idx_a, idx_b = pix_a[ia], pix_b[ib]
    conf = np.ones(len(idx_a))

    n_out = int(round(spec.effective_outlier_rate * len(idx_a)))
    if n_out:
        valid_a = np.nonzero(frame_a.observation.flat_valid)[0]
        valid_b = np.nonzero(frame_b.observation.flat_valid)[0]
        idx_a = np.concatenate([idx_a, rng.choice(valid_a, n_out)])
        idx_b = np.concatenate([idx_b, rng.choice(valid_b, n_out)])
        conf = np.concatenate([conf, rng.uniform(0.9, 1.0, n_out)])
    return CorrespondenceSet(a, b, idx_a, idx_b, conf)


def generate_scene(spec: SceneSpec, workers: int = 1) -> tuple[SyntheticObservation, GroundTruth]:
    """Render a synthetic video of `spec`; deterministic for a given seed."""
    if not spec.parts:
        raise EmptySurface("scene has no parts")
    canonical = canonical_surface(spec)
    joint = spec.joint.to_model()
    movable = canonical.part_labels == spec.movable_part
    cameras = camera_trajectory(spec)

    surface_idx = fused_indices(spec, canonical)
    surface = PointCloud(canonical.points[surface_idx], labels=canonical.part_labels[surface_idx])
    segment_ids = tracked_segment_ids(spec, canonical, cameras[0])

    def render(t: int) -> _RenderedFrame:
        return _render_frame(spec, t, canonical, movable, joint, cameras[t], segment_ids)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(render, range(spec.frame_count)))
    else:
        frames = [render(t) for t in range(spec.frame_count)]

    selected = subsample_frames(spec.frame_count, spec.target_frame_count)
    correspondences = [
        _correspondences(spec, selected[i], selected[j], frames[selected[i]], frames[selected[j]])
        for i, j in frame_pairs(len(selected), spec.pair_window)
    ]

    gt = GroundTruth(
        joint=joint,
        states=JointStateSequence(np.asarray(spec.states)),
        cameras=cameras,
        moving_maps=np.stack([f.gt_map for f in frames]),
        surface_labels=canonical.part_labels[surface_idx],
        movable_part=spec.movable_part,
        canonical_points=canonical.points,
        canonical_labels=canonical.part_labels,
    )
    dataset = Dataset(
        intrinsics=spec.intrinsics,
        frames=[f.observation for f in frames],
        moving_maps=np.stack([f.observed_map for f in frames]),
        segment_labels=np.stack([f.segment_labels for f in frames]),
        correspondences=correspondences,
        surface=surface,
        ground_truth=gt,
        name=f"synth-{spec.seed}",
        meta={"seed": spec.seed, "joint_type": joint.joint_type.value},
    )
    logger.info(
        "synth.scene seed=%d frames=%d surface=%d pairs=%d joint=%s",
        spec.seed, spec.frame_count, len(surface), len(correspondences), joint.joint_type.value,
    )
    return dataset, gt
