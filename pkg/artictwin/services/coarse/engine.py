"""Coarse prediction.

Static-region matches give the camera trajectory (consecutive frames, chained
into frame-0 coordinates). Dynamic-region matches, lifted into world
coordinates, give one rigid part motion per frame pair; RANSAC fits it under
both joint hypotheses, each pair votes, and the per-pair joints are averaged.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from artictwin.config import Settings, settings as default_settings
from artictwin.services.coarse.frames import frame_pairs
from artictwin.services.coarse.models import (
    CoarseEstimate,
    HypothesisFit,
    JointCandidate,
    JointMotion,
    LabeledMatches,
    MatchRegion,
    PairResult,
)
from artictwin.services.coarse.ransac import RansacResult, ransac
from artictwin.services.errors import (
    DegenerateConfiguration,
    DegenerateMotion,
    InsufficientStaticMatches,
    NoValidPairs,
)
from artictwin.services.geometry import (
    JointModel,
    JointType,
    RigidTransform,
    fit_rigid_transform,
    screw_decompose,
)
from artictwin.services.geometry.joints import closest_point_to_origin
from artictwin.services.observations import CorrespondenceSet, Dataset, FrameObservation

logger = logging.getLogger(__name__)

_PRISMATIC_MIN_DISPLACEMENT = 1e-9  # meters


# ── matches ──────────────────────────────────────────────────────────────────

def label_matches(
    corr: CorrespondenceSet,
    frame_a: FrameObservation,
    frame_b: FrameObservation,
    map_a: np.ndarray,
    map_b: np.ndarray,
    pos_a: int,
    pos_b: int,
    threshold: float = 0.5,
) -> LabeledMatches:
    """Drop matches on invalid pixels and label the rest static / dynamic / mixed.

    A match is dynamic iff both endpoints have moving-map value >= threshold,
    static iff both are below it.
    """
    n_pix = frame_a.height * frame_a.width
    in_range = (corr.idx_a >= 0) & (corr.idx_a < n_pix) & (corr.idx_b >= 0) & (corr.idx_b < n_pix)
    if not in_range.all():
        raise ValueError(f"pair ({corr.frame_a}, {corr.frame_b}): pixel index out of range")
    ok = frame_a.flat_valid[corr.idx_a] & frame_b.flat_valid[corr.idx_b]
    idx_a, idx_b, conf = corr.idx_a[ok], corr.idx_b[ok], corr.confidence[ok]
    order = np.lexsort((conf, idx_b, idx_a))
    idx_a, idx_b, conf = idx_a[order], idx_b[order], conf[order]

    moving_a = map_a.reshape(-1)[idx_a] >= threshold
    moving_b = map_b.reshape(-1)[idx_b] >= threshold
    region = np.full(len(idx_a), MatchRegion.MIXED.value, dtype=object)
    region[moving_a & moving_b] = MatchRegion.DYNAMIC.value
    region[~moving_a & ~moving_b] = MatchRegion.STATIC.value

    return LabeledMatches(
        pos_a=pos_a,
        pos_b=pos_b,
        idx_a=idx_a,
        idx_b=idx_b,
        points_a=frame_a.flat_points[idx_a],
        points_b=frame_b.flat_points[idx_b],
        confidence=conf,
        region=region,
    )


def _correspondence_lookup(dataset: Dataset) -> dict[tuple[int, int], CorrespondenceSet]:
    return {(c.frame_a, c.frame_b): c for c in dataset.correspondences}


def pair_matches(
    dataset: Dataset,
    pos_a: int,
    pos_b: int,
    moving_maps: np.ndarray,
    threshold: float,
    lookup: Optional[dict[tuple[int, int], CorrespondenceSet]] = None,
) -> Optional[LabeledMatches]:
    """Labeled matches between two video positions, or None if the pair has no file."""
    lookup = _correspondence_lookup(dataset) if lookup is None else lookup
    fa, fb = dataset.frames[pos_a], dataset.frames[pos_b]
    corr = lookup.get((fa.frame_id, fb.frame_id))
    if corr is None:
        return None
    return label_matches(corr, fa, fb, moving_maps[pos_a], moving_maps[pos_b], pos_a, pos_b, threshold)


# ── camera trajectory ────────────────────────────────────────────────────────

def _fit_or_none(src: np.ndarray, dst: np.ndarray) -> Optional[RigidTransform]:
    try:
        return fit_rigid_transform(src, dst)
    except DegenerateConfiguration:
        return None


def _transform_residual(T: RigidTransform, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    return np.linalg.norm(T.apply(src) - dst, axis=1)


def _relative_pose(matches: LabeledMatches, cfg: Settings, rng: np.random.Generator) -> RigidTransform:
    """camera_a-from-camera_b from static matches."""
    src, dst = matches.points_b, matches.points_a
    if not cfg.CAMERA_RANSAC:
        return fit_rigid_transform(src, dst)
    result = ransac(
        src, dst, _fit_or_none, _transform_residual, rng,
        cfg.RANSAC_ITERATIONS, cfg.RANSAC_SAMPLE_SIZE, cfg.RANSAC_INLIER_RADIUS,
    )
    if result is None:
        raise DegenerateConfiguration("every static sample was degenerate")
    return result.model


def estimate_camera_poses(
    dataset: Dataset,
    moving_maps: Optional[np.ndarray] = None,
    cfg: Settings = default_settings,
    seed: int = 0,
    use_regions: bool = True,
) -> list[RigidTransform]:
    """World-from-camera pose per frame, world = frame-0 camera.

    Consecutive frames are aligned on confident static matches and chained.
    `use_regions=False` ignores the moving maps and uses every match.
    """
    maps = dataset.moving_maps if moving_maps is None else moving_maps
    lookup = _correspondence_lookup(dataset)
    poses = [RigidTransform.identity()]
    for pos in range(1, dataset.frame_count):
        frame_id = dataset.frames[pos].frame_id
        matches = pair_matches(dataset, pos - 1, pos, maps, cfg.REGION_THRESHOLD, lookup)
        if matches is None:
            raise InsufficientStaticMatches(frame_id, 0)
        usable = matches.confident(cfg.MATCH_CONFIDENCE)
        if use_regions:
            usable = usable.in_region(MatchRegion.STATIC)
        if len(usable) < cfg.MIN_STATIC_MATCHES:
            raise InsufficientStaticMatches(frame_id, len(usable))
        rng = np.random.default_rng([seed, 1, pos])
        try:
            relative = _relative_pose(usable, cfg, rng)
        except DegenerateConfiguration as exc:
            raise InsufficientStaticMatches(frame_id, len(usable)) from exc
        pose = poses[-1].compose(relative)
        if pos % 100 == 0:
            pose = pose.orthonormalized()
        poses.append(pose)
        logger.debug("coarse.camera frame=%d static=%d", frame_id, len(usable))
    return poses


# ── joint fitting ────────────────────────────────────────────────────────────

def _revolute_fit(src: np.ndarray, dst: np.ndarray) -> Optional[JointMotion]:
    T = _fit_or_none(src, dst)
    if T is None:
        return None
    screw = screw_decompose(T).joint(JointType.REVOLUTE)
    return None if screw is None else JointMotion(*screw)


def _prismatic_fit(src: np.ndarray, dst: np.ndarray) -> Optional[JointMotion]:
    # the rigid fit maps centroid onto centroid, so its translation along the
    # prismatic hypothesis is the centroid displacement
    shift = dst.mean(axis=0) - src.mean(axis=0)
    dist = float(np.linalg.norm(shift))
    if dist < _PRISMATIC_MIN_DISPLACEMENT:
        return None
    return JointMotion(JointModel(JointType.PRISMATIC, shift / dist, np.zeros(3)), dist)


def _motion_residual(motion: JointMotion, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    return np.linalg.norm(motion.transform.apply(src) - dst, axis=1)


_FITTERS = {JointType.REVOLUTE: _revolute_fit, JointType.PRISMATIC: _prismatic_fit}


def estimate_joint_pair(
    src: np.ndarray,
    dst: np.ndarray,
    hypothesis: JointType,
    rng: np.random.Generator,
    cfg: Settings = default_settings,
) -> RansacResult[JointMotion]:
    """RANSAC joint fit for world-frame dynamic matches src (frame t) -> dst (frame t').

    Raises DegenerateMotion when no sample, nor the refit, gives a
    non-degenerate screw under `hypothesis`.
    """
    hypothesis = JointType(hypothesis)
    result = ransac(
        np.asarray(src, dtype=np.float64),
        np.asarray(dst, dtype=np.float64),
        _FITTERS[hypothesis],
        _motion_residual,
        rng,
        cfg.RANSAC_ITERATIONS,
        cfg.RANSAC_SAMPLE_SIZE,
        cfg.RANSAC_INLIER_RADIUS,
    )
    if result is None:
        raise DegenerateMotion(f"no {hypothesis.value} motion in {len(src)} matches")
    return result


def _as_fit(result: RansacResult[JointMotion]) -> HypothesisFit:
    m = result.model
    return HypothesisFit(
        axis=m.joint.axis.tolist(),
        pivot=m.joint.pivot.tolist(),
        delta=float(m.delta),
        residual=result.mean_inlier_residual,
        cost=result.truncated_cost,
        inliers=result.inlier_count,
    )


def _significant(fit: HypothesisFit, joint_type: JointType, cfg: Settings) -> bool:
    limit = cfg.MIN_PAIR_ROTATION if joint_type is JointType.REVOLUTE else cfg.MIN_PAIR_TRANSLATION
    return abs(fit.delta) >= limit


def process_pair(
    dataset: Dataset,
    pos_a: int,
    pos_b: int,
    cameras: Sequence[RigidTransform],
    moving_maps: np.ndarray,
    cfg: Settings,
    seed: int,
    lookup: Optional[dict[tuple[int, int], CorrespondenceSet]] = None,
) -> PairResult:
    """Fit both hypotheses on one pair's dynamic matches and record its vote."""
    result = PairResult(
        pos_a=pos_a,
        pos_b=pos_b,
        frame_a=dataset.frames[pos_a].frame_id,
        frame_b=dataset.frames[pos_b].frame_id,
    )
    matches = pair_matches(dataset, pos_a, pos_b, moving_maps, cfg.REGION_THRESHOLD, lookup)
    if matches is None:
        result.skipped = "no correspondences"
        return result
    confident = matches.confident(cfg.MATCH_CONFIDENCE)
    dynamic = confident.in_region(MatchRegion.DYNAMIC)
    result.matches = len(confident)
    result.static_matches = len(confident.in_region(MatchRegion.STATIC))
    result.dynamic_matches = len(dynamic)
    if len(dynamic) < cfg.MIN_PAIR_MATCHES:
        result.skipped = f"{len(dynamic)} dynamic matches < {cfg.MIN_PAIR_MATCHES}"
        return result

    src = cameras[pos_a].apply(dynamic.points_a)
    dst = cameras[pos_b].apply(dynamic.points_b)
    for k, jt in enumerate((JointType.REVOLUTE, JointType.PRISMATIC)):
        rng = np.random.default_rng([seed, 2, pos_a, pos_b, k])
        try:
            fit = _as_fit(estimate_joint_pair(src, dst, jt, rng, cfg))
        except DegenerateMotion:
            continue
        if jt is JointType.REVOLUTE:
            result.revolute = fit
        else:
            result.prismatic = fit

    candidates = [
        (fit.residual, jt)
        for jt in (JointType.REVOLUTE, JointType.PRISMATIC)
        if (fit := result.fit_for(jt)) is not None and _significant(fit, jt, cfg)
    ]
    if candidates:
        result.vote = min(candidates, key=lambda c: c[0])[1]
    else:
        result.skipped = "no significant motion"
    logger.debug(
        "coarse.pair t=%d t2=%d dynamic=%d vote=%s",
        result.frame_a, result.frame_b, len(dynamic), result.vote.value if result.vote else None,
    )
    return result


# ── voting and averaging ─────────────────────────────────────────────────────

def _average_candidate(
    pairs: Sequence[PairResult],
    joint_type: JointType,
    frame_count: int,
    cfg: Settings,
) -> Optional[JointCandidate]:
    fits = [(p, p.fit_for(joint_type)) for p in pairs]
    fits = [(p, f) for p, f in fits if f is not None and _significant(f, joint_type, cfg)]
    if not fits:
        return None

    reference = np.asarray(fits[0][1].axis)
    axes, pivots, aligned = [], [], {}
    for pair, fit in fits:
        motion = fit.motion(joint_type)
        if motion.joint.axis @ reference < 0:
            motion = motion.flipped()
        axes.append(motion.joint.axis)
        pivots.append(motion.joint.pivot)
        aligned[(pair.pos_a, pair.pos_b)] = motion.delta

    axis = np.mean(axes, axis=0)
    axis /= np.linalg.norm(axis)
    pivot = np.zeros(3)
    if joint_type is JointType.REVOLUTE:
        pivot = closest_point_to_origin(axis, np.mean(pivots, axis=0))

    states = [0.0]
    for pos in range(1, frame_count):
        delta = aligned.get((pos - 1, pos))
        if delta is None:
            logger.warning("coarse.state_gap hypothesis=%s pos=%d (delta taken as 0)", joint_type.value, pos)
            delta = 0.0
        states.append(states[-1] + delta)

    return JointCandidate(
        joint_type=joint_type,
        axis=axis.tolist(),
        pivot=pivot.tolist(),
        votes=sum(1 for p in pairs if p.vote is joint_type),
        mean_residual=float(np.mean([f.residual for _, f in fits])),
        states=states,
    )


def vote_and_average(
    pairs: Sequence[PairResult],
    frame_count: int,
    cfg: Settings = default_settings,
) -> tuple[JointType, Optional[JointCandidate], Optional[JointCandidate]]:
    """Majority joint type and the averaged candidate for each hypothesis.

    Each pair has already voted for its lower mean-inlier-residual hypothesis;
    vote ties go to the type with the lower mean residual over its pairs.
    """
    voting = [p for p in pairs if p.vote is not None]
    if not voting:
        raise NoValidPairs(f"none of {len(pairs)} frame pairs gave a usable joint estimate")

    revolute = _average_candidate(pairs, JointType.REVOLUTE, frame_count, cfg)
    prismatic = _average_candidate(pairs, JointType.PRISMATIC, frame_count, cfg)
    rev_votes = sum(1 for p in voting if p.vote is JointType.REVOLUTE)
    pri_votes = len(voting) - rev_votes
    if rev_votes != pri_votes:
        voted = JointType.REVOLUTE if rev_votes > pri_votes else JointType.PRISMATIC
    else:
        rev_residual = revolute.mean_residual if revolute is not None else np.inf
        pri_residual = prismatic.mean_residual if prismatic is not None else np.inf
        voted = JointType.REVOLUTE if rev_residual <= pri_residual else JointType.PRISMATIC
    return voted, revolute, prismatic


# ── stage entry point ────────────────────────────────────────────────────────

def run_coarse(
    dataset: Dataset,
    cfg: Settings = default_settings,
    seed: int = 0,
    moving_maps: Optional[np.ndarray] = None,
    workers: Optional[int] = None,
) -> CoarseEstimate:
    """Coarse cameras and joint candidates for an already subsampled video."""
    if dataset.frame_count < 2:
        raise ValueError("coarse prediction needs at least 2 frames")
    maps = dataset.moving_maps if moving_maps is None else moving_maps
    cameras = estimate_camera_poses(dataset, maps, cfg, seed)
    lookup = _correspondence_lookup(dataset)
    positions = frame_pairs(dataset.frame_count, cfg.PAIR_WINDOW)
    workers = cfg.THREADS if workers is None else workers

    def work(pair: tuple[int, int]) -> PairResult:
        return process_pair(dataset, pair[0], pair[1], cameras, maps, cfg, seed, lookup)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(work, positions))
    else:
        pairs = [work(p) for p in positions]

    voted, revolute, prismatic = vote_and_average(pairs, dataset.frame_count, cfg)
    estimate = CoarseEstimate(
        frame_ids=dataset.frame_ids,
        cameras=[c.to_list() for c in cameras],
        voted_type=voted,
        revolute=revolute,
        prismatic=prismatic,
        pairs=pairs,
    )
    logger.info(
        "coarse.done frames=%d pairs=%d voting=%d voted=%s rev_votes=%d pri_votes=%d",
        dataset.frame_count, len(pairs), sum(1 for p in pairs if p.vote is not None), voted.value,
        revolute.votes if revolute else 0, prismatic.votes if prismatic else 0,
    )
    return estimate
