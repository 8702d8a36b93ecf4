"""Refinement runs for both joint hypotheses and the final joint-type choice."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from artictwin.config import Settings, settings as default_settings
from artictwin.services.coarse.models import CoarseEstimate
from artictwin.services.errors import NonFiniteLoss
from artictwin.services.geometry import (
    JointModel,
    JointStateSequence,
    JointType,
    NearestNeighborIndex,
    PointCloud,
    RigidTransform,
    point_line_distance,
)
from artictwin.services.observations import Dataset
from artictwin.services.refine.models import (
    LossRecord,
    MovingVector,
    RefineParams,
    RefineReport,
    RefineState,
    UnitLayout,
    UnitMode,
    HypothesisResult,
)
from artictwin.services.refine.moving import initial_units
from artictwin.services.refine.objective import RefineProblem, associate, build_problem, evaluate, forward_loss
from artictwin.services.refine.optimizer import Adam

logger = logging.getLogger(__name__)

_HYPOTHESES = (JointType.REVOLUTE, JointType.PRISMATIC)


# ── initial states ───────────────────────────────────────────────────────────

def initial_state(
    hypothesis: JointType,
    cameras: Sequence[RigidTransform],
    joint: JointModel,
    states: Sequence[float],
    vector: MovingVector,
    layout: UnitLayout,
) -> RefineState:
    """RefineState with zero camera increments around `cameras`."""
    T = len(cameras)
    s = np.array(states, dtype=np.float64)
    if len(s) != T:
        raise ValueError(f"{len(s)} states for {T} frames")
    s[0] = 0.0
    params = RefineParams(
        camera=np.zeros((T, 6)),
        axis=joint.axis.copy(),
        pivot=joint.pivot.copy() if hypothesis is JointType.REVOLUTE else np.zeros(3),
        states=s,
        logits=np.array(vector.logits, dtype=np.float64),
    )
    return RefineState(JointType(hypothesis), params, list(cameras), layout)


def random_joint(hypothesis: JointType, surface: np.ndarray, rng: np.random.Generator) -> JointModel:
    """Seeded random joint: uniform axis direction, pivot at the surface centroid."""
    axis = rng.normal(size=3)
    return JointModel.create(hypothesis, axis, surface.mean(axis=0))


def coarse_initial_state(
    hypothesis: JointType,
    coarse: CoarseEstimate,
    surface: np.ndarray,
    vector: MovingVector,
    layout: UnitLayout,
    seed: int,
) -> RefineState:
    """Start from the coarse candidate; a hypothesis without one starts from a random joint."""
    cameras = coarse.camera_transforms()
    candidate = coarse.candidate(hypothesis)
    if candidate is not None:
        return initial_state(hypothesis, cameras, candidate.joint(), candidate.states, vector, layout)
    logger.warning("refine.init hypothesis=%s has no coarse candidate, using random joint", hypothesis.value)
    rng = np.random.default_rng([seed, 3, 0 if hypothesis is JointType.REVOLUTE else 1])
    return initial_state(hypothesis, cameras, random_joint(hypothesis, surface, rng), np.zeros(len(cameras)), vector, layout)


def random_initial_state(
    hypothesis: JointType,
    frame_count: int,
    surface: np.ndarray,
    vector: MovingVector,
    layout: UnitLayout,
    seed: int,
) -> RefineState:
    """Coarse-free start: identity cameras, random joint, all states 0."""
    rng = np.random.default_rng([seed, 4, 0 if hypothesis is JointType.REVOLUTE else 1])
    cameras = [RigidTransform.identity() for _ in range(frame_count)]
    return initial_state(hypothesis, cameras, random_joint(hypothesis, surface, rng), np.zeros(frame_count), vector, layout)


# ── optimisation ─────────────────────────────────────────────────────────────

def _frozen_masks(state: RefineState) -> dict[str, np.ndarray]:
    camera = np.zeros_like(state.params.camera, dtype=bool)
    camera[0] = True
    states = np.zeros_like(state.params.states, dtype=bool)
    states[0] = True
    pivot = np.full(3, state.hypothesis is JointType.PRISMATIC)
    return {"camera": camera, "states": states, "pivot": pivot}


def optimize(
    initial: RefineState,
    problem: RefineProblem,
    cfg: Settings = default_settings,
    seed: int = 0,
    iterations: Optional[int] = None,
) -> RefineState:
    """Adam on all free parameters; neighbours are re-associated every iteration.

    Raises NonFiniteLoss with the failing iteration.
    """
    iterations = cfg.ADAM_ITERATIONS if iterations is None else iterations
    params = initial.params.copy()
    adam = Adam(cfg.ADAM_LR, cfg.ADAM_BETA1, cfg.ADAM_BETA2, cfg.ADAM_EPS, frozen=_frozen_masks(initial))
    values = params.as_dict()
    history: list[LossRecord] = []

    for it in range(iterations):
        current = RefineParams.from_dict(values)
        try:
            assoc = associate(current, problem, it, seed, cfg.SUBSAMPLE_FRACTION)
            record, grads = evaluate(current, problem, assoc)
        except FloatingPointError as exc:
            raise NonFiniteLoss(it, problem.hypothesis.value) from exc
        if not np.isfinite(record.total) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise NonFiniteLoss(it, problem.hypothesis.value)
        history.append(LossRecord(it, record.static, record.dynamic))
        adam.step(values, grads)
        if it % 100 == 0:
            logger.debug("refine.iter hypothesis=%s it=%d loss=%.6g", problem.hypothesis.value, it, record.total)

    final_params = RefineParams.from_dict(values)
    try:
        final = forward_loss(final_params, problem, seed, iterations, fraction=1.0)
    except FloatingPointError as exc:
        raise NonFiniteLoss(iterations, problem.hypothesis.value) from exc
    if not np.isfinite(final.total):
        raise NonFiniteLoss(iterations, problem.hypothesis.value)

    logger.info(
        "refine.done hypothesis=%s iterations=%d initial=%.6g final=%.6g",
        problem.hypothesis.value, iterations, history[0].total if history else final.total, final.total,
    )
    return RefineState(
        hypothesis=initial.hypothesis,
        params=final_params,
        base_cameras=initial.base_cameras,
        layout=initial.layout,
        loss_history=history,
        final_loss=final,
    )


# ── joint-type selection ─────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Selection:
    joint_type: JointType
    state: RefineState
    reason: str
    axis_surface_distance: Optional[float] = None

    @property
    def joint(self) -> JointModel:
        return self.state.joint

    @property
    def states(self) -> JointStateSequence:
        return self.state.state_sequence

    def moving_maps(self) -> np.ndarray:
        return self.state.moving_maps()


def select_joint_type(
    revolute: Optional[RefineState],
    prismatic: Optional[RefineState],
    surface: PointCloud | np.ndarray,
    cfg: Settings = default_settings,
) -> Selection:
    """Prismatic when the revolute axis misses P^O by more than the limit, else the lower loss."""
    if revolute is None and prismatic is None:
        raise ValueError("no hypothesis result to select from")
    if revolute is None:
        return Selection(JointType.PRISMATIC, prismatic, "revolute run unavailable")
    if prismatic is None:
        return Selection(JointType.REVOLUTE, revolute, "prismatic run unavailable")

    points = surface.points if isinstance(surface, PointCloud) else np.asarray(surface)
    joint = revolute.joint
    distance = float(point_line_distance(points, joint.axis, joint.pivot).min())
    if distance > cfg.PRISMATIC_AXIS_DISTANCE:
        return Selection(
            JointType.PRISMATIC, prismatic,
            f"revolute axis {distance:.3f} m from surface", distance,
        )
    if revolute.loss <= prismatic.loss:
        return Selection(JointType.REVOLUTE, revolute, "lower final loss", distance)
    return Selection(JointType.PRISMATIC, prismatic, "lower final loss", distance)


# ── stage entry point ────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class RefineOutcome:
    states: dict[JointType, RefineState]
    selection: Selection
    initial_vector: MovingVector
    layout: UnitLayout
    report: RefineReport


def run_refine(
    dataset: Dataset,
    coarse: Optional[CoarseEstimate],
    cfg: Settings = default_settings,
    seed: int = 0,
    mode: UnitMode = UnitMode.SEGMENTS,
    moving_maps: Optional[np.ndarray] = None,
    iterations: Optional[int] = None,
) -> RefineOutcome:
    """Optimise both hypotheses and pick the joint type.

    Without a coarse estimate every hypothesis starts from a seeded random
    joint with identity cameras.
    """
    maps = dataset.moving_maps if moving_maps is None else moving_maps
    surface = dataset.surface.points
    layout, vector = initial_units(dataset, mode, maps, cfg.clamp_range, cfg.REGION_THRESHOLD)
    index = NearestNeighborIndex(surface, cfg.THREADS)

    def run(hypothesis: JointType) -> Optional[RefineState]:
        if coarse is None:
            start = random_initial_state(hypothesis, dataset.frame_count, surface, vector, layout, seed)
        else:
            start = coarse_initial_state(hypothesis, coarse, surface, vector, layout, seed)
        problem = build_problem(dataset, layout, start.base_cameras, index, hypothesis)
        try:
            return optimize(start, problem, cfg, seed, iterations)
        except NonFiniteLoss as exc:
            logger.warning("refine.failed hypothesis=%s error=%s", hypothesis.value, exc)
            return None

    if cfg.THREADS > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            results = list(pool.map(run, _HYPOTHESES))
    else:
        results = [run(h) for h in _HYPOTHESES]
    by_type = {h: r for h, r in zip(_HYPOTHESES, results) if r is not None}
    if not by_type:
        raise NonFiniteLoss(-1, "both")

    selection = select_joint_type(by_type.get(JointType.REVOLUTE), by_type.get(JointType.PRISMATIC), surface, cfg)
    report = RefineReport(
        frame_ids=dataset.frame_ids,
        selected=selection.joint_type,
        selection_reason=selection.reason,
        axis_surface_distance=selection.axis_surface_distance,
        hypotheses=[HypothesisResult.from_state(by_type[h]) for h in _HYPOTHESES if h in by_type],
        newly_observed=list(layout.newly_observed),
    )
    logger.info("refine.selected type=%s reason=%s", selection.joint_type.value, selection.reason)
    return RefineOutcome(by_type, selection, vector, layout, report)
