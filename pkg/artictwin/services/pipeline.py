"""
End-to-end run on one video.

  1. Subsample frames (frame 0 always kept).
  2. Coarse cameras and joint candidates.
  3. Refine both hypotheses, select the joint type.
  4. Split P^O into static and movable points.
  5. Score against ground truth when the dataset carries it.

A stage that raises is recorded as a FailureRecord and the stages depending
on it are skipped; the report then carries the failure metric values.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, TypeVar

import numpy as np
from pydantic import BaseModel

from artictwin.config import Settings, settings as default_settings
from artictwin.services.coarse import CoarseEstimate, run_coarse, subsample_frames
from artictwin.services.errors import ArticTwinError
from artictwin.services.evaluation.metrics import (
    camera_metrics,
    failure_joint_metrics,
    geometry_metrics,
    joint_metrics,
    miou,
    partition_iou,
)
from artictwin.services.evaluation.report import AblationMode, FailureRecord, PipelineStage, SceneReport
from artictwin.services.geometry import JointModel, JointStateSequence, JointType, RigidTransform
from artictwin.services.interchange import write_loss_history, write_model_json, write_partition
from artictwin.services.observations import Dataset
from artictwin.services.refine import RefineOutcome, UnitMode, run_refine
from artictwin.services.segment import MOVABLE_LABEL, SurfacePartition, extract_movable_part

logger = logging.getLogger(__name__)

ARTICULATION_SCHEMA_VERSION = 1

_R = TypeVar("_R")


class ArticulationResult(BaseModel):
    """The digital twin's articulation: joint, per-frame states and cameras."""

    schema_version: int = ARTICULATION_SCHEMA_VERSION
    name: str
    seed: int
    mode: AblationMode
    frame_ids: List[int]
    joint: Optional[dict] = None
    states: Optional[List[float]] = None
    cameras: Optional[List[List[List[float]]]] = None
    movable_points: int = 0
    static_points: int = 0
    failure: Optional[FailureRecord] = None


@dataclass(eq=False)
class PipelineResult:
    report: SceneReport
    articulation: ArticulationResult
    dataset: Dataset
    coarse: Optional[CoarseEstimate] = None
    refine: Optional[RefineOutcome] = None
    partition: Optional[SurfacePartition] = None
    joint: Optional[JointModel] = None
    states: Optional[JointStateSequence] = None
    cameras: Optional[list[RigidTransform]] = None
    moving_maps: Optional[np.ndarray] = None
    failures: list[FailureRecord] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return bool(self.failures)


def _run_stage(stage: PipelineStage, failures: list[FailureRecord], fn: Callable[[], _R]) -> Optional[_R]:
    try:
        return fn()
    except ArticTwinError as exc:
        logger.warning("pipeline.stage_failed stage=%s error=%s message=%s", stage.value, type(exc).__name__, exc)
        failures.append(FailureRecord(stage=stage, error=type(exc).__name__, message=str(exc)))
    except Exception as exc:
        logger.exception("pipeline.stage_crashed stage=%s", stage.value)
        failures.append(FailureRecord(stage=stage, error=type(exc).__name__, message=str(exc)))
    return None


def run_pipeline(
    dataset: Dataset,
    cfg: Settings = default_settings,
    seed: int = 0,
    mode: AblationMode = AblationMode.FULL,
    out_dir: Optional[str | Path] = None,
    iterations: Optional[int] = None,
) -> PipelineResult:
    """Run every stage on `dataset`; never raises for stage errors.

    With `out_dir` the artifacts are written there: coarse.json, refine.json,
    loss_history_<hypothesis>.csv, partition.ply, articulation.json and
    report.json. Identical inputs and seed give byte-identical files.
    """
    mode = AblationMode(mode)
    failures: list[FailureRecord] = []
    logger.info("pipeline.start name=%s seed=%d mode=%s frames=%d", dataset.name, seed, mode.value, dataset.frame_count)

    data = _run_stage(
        PipelineStage.LOAD, failures,
        lambda: dataset.select_frames(subsample_frames(dataset.frame_count, cfg.TARGET_FRAME_COUNT)),
    )

    coarse: Optional[CoarseEstimate] = None
    if data is not None and mode is not AblationMode.NO_COARSE:
        coarse = _run_stage(PipelineStage.COARSE, failures, lambda: run_coarse(data, cfg, seed))

    refined: Optional[RefineOutcome] = None
    if data is not None and mode is not AblationMode.NO_REFINE and (coarse is not None or mode is AblationMode.NO_COARSE):
        unit_mode = UnitMode.PIXELS if mode is AblationMode.NO_SEGMENT else UnitMode.SEGMENTS
        refined = _run_stage(
            PipelineStage.REFINE, failures,
            lambda: run_refine(data, coarse if mode is not AblationMode.NO_COARSE else None, cfg, seed, unit_mode, iterations=iterations),
        )

    joint = states = cameras = maps = None
    if refined is not None:
        joint, states = refined.selection.joint, refined.selection.states
        cameras, maps = refined.selection.state.cameras, refined.selection.moving_maps()
    elif mode is AblationMode.NO_REFINE and coarse is not None:
        candidate = coarse.candidate(coarse.voted_type)
        if candidate is not None:
            joint, states = candidate.joint(), candidate.state_sequence()
            cameras, maps = coarse.camera_transforms(), data.moving_maps

    partition: Optional[SurfacePartition] = None
    if data is not None:
        seg_maps = maps if maps is not None else data.moving_maps
        camera0 = cameras[0] if cameras is not None else None
        partition = _run_stage(
            PipelineStage.SEGMENT, failures,
            lambda: extract_movable_part(data.surface, seg_maps[0], data.frames[0], cfg, camera0),
        )

    result = PipelineResult(
        report=SceneReport(name=dataset.name, seed=seed, mode=mode),
        articulation=ArticulationResult(
            name=dataset.name, seed=seed, mode=mode,
            frame_ids=data.frame_ids if data is not None else dataset.frame_ids,
        ),
        dataset=data if data is not None else dataset,
        coarse=coarse,
        refine=refined,
        partition=partition,
        joint=joint,
        states=states,
        cameras=cameras,
        moving_maps=maps,
        failures=failures,
    )
    result.articulation = _articulation(result)
    if data is not None and data.ground_truth is not None:
        report = _run_stage(PipelineStage.EVALUATE, failures, lambda: evaluate_result(result, cfg, seed))
        if report is not None:
            result.report = report
    if failures:
        result.report = result.report.model_copy(update={"failure": failures[0]})
        result.articulation = result.articulation.model_copy(update={"failure": failures[0]})

    if out_dir is not None:
        write_artifacts(result, out_dir)
    logger.info(
        "pipeline.done name=%s type=%s failures=%d",
        dataset.name, joint.joint_type.value if joint is not None else "none", len(failures),
    )
    return result


def _articulation(result: PipelineResult) -> ArticulationResult:
    update: dict = {}
    if result.joint is not None:
        update["joint"] = result.joint.to_dict()
        update["states"] = result.states.states.tolist()
        update["cameras"] = [c.to_list() for c in result.cameras]
    if result.partition is not None:
        update["movable_points"] = len(result.partition.movable)
        update["static_points"] = len(result.partition.static)
    return result.articulation.model_copy(update=update)


def evaluate_result(result: PipelineResult, cfg: Settings = default_settings, seed: int = 0) -> SceneReport:
    """Score a pipeline result against the ground truth of its (subsampled) dataset.

    A stage that was supposed to run but produced nothing scores the failure values.
    """
    data = result.dataset
    gt = data.ground_truth
    if gt is None:
        raise ValueError("dataset has no ground truth")
    mode = result.report.mode
    update: dict = {"gt_type": gt.joint.joint_type}

    if mode is not AblationMode.NO_COARSE:
        coarse = result.coarse
        if coarse is None:
            update["coarse"] = failure_joint_metrics(gt.joint.joint_type)
        else:
            candidate = coarse.candidate(coarse.voted_type)
            update["coarse"] = (
                failure_joint_metrics(gt.joint.joint_type) if candidate is None
                else joint_metrics(candidate.joint(), candidate.state_sequence(), gt.joint, gt.states)
            )
            rot, trans = camera_metrics(coarse.camera_transforms(), gt.cameras)
            update["coarse_camera_rotation_error"] = rot
            update["coarse_camera_translation_error"] = trans

    final_metrics = (
        failure_joint_metrics(gt.joint.joint_type) if result.joint is None
        else joint_metrics(result.joint, result.states, gt.joint, gt.states)
    )
    if mode is not AblationMode.NO_REFINE:
        update["refined"] = final_metrics
    if result.joint is not None:
        update["predicted_type"] = result.joint.joint_type
        rot, trans = camera_metrics(result.cameras, gt.cameras)
        update["camera_rotation_error"] = rot
        update["camera_translation_error"] = trans

    update["miou_input"] = miou(data.moving_maps, gt.moving_maps, cfg.MIOU_THRESHOLD)
    if result.moving_maps is not None and mode is not AblationMode.NO_REFINE:
        update["miou_refined"] = miou(result.moving_maps, gt.moving_maps, cfg.MIOU_THRESHOLD)

    if result.partition is not None:
        movable = result.partition.labels() == MOVABLE_LABEL
        update["partition_iou"] = partition_iou(movable, gt.surface_movable)
        update["no_moving_pixels"] = result.partition.no_moving_pixels
        update["geometry"] = geometry_metrics(
            data.surface.points, movable,
            gt.canonical_points, gt.canonical_labels == gt.movable_part,
            samples=cfg.GEOMETRY_SAMPLES, seed=seed, workers=cfg.THREADS,
        )
    return result.report.model_copy(update=update)


def write_artifacts(result: PipelineResult, out_dir: str | Path) -> Path:
    """Every output of one run under `out_dir`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if result.coarse is not None:
        write_model_json(out / "coarse.json", result.coarse)
    if result.refine is not None:
        write_model_json(out / "refine.json", result.refine.report)
        for hypothesis in (JointType.REVOLUTE, JointType.PRISMATIC):
            state = result.refine.states.get(hypothesis)
            if state is not None:
                write_loss_history(out / f"loss_history_{hypothesis.value}.csv", state.loss_history)
    if result.partition is not None:
        write_partition(out / "partition.ply", result.dataset.surface.points, result.partition.labels())
    write_model_json(out / "articulation.json", result.articulation)
    write_model_json(out / "report.json", result.report)
    logger.info("pipeline.artifacts dir=%s", out)
    return out
