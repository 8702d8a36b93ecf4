"""
eval: score stored pipeline outputs against a ground-truth dataset.
eval variance: seeded multi-run statistics over a set of scene specs.
"""
import argparse
import logging
from pathlib import Path

import numpy as np

from artictwin.config import Settings
from artictwin.services.coarse import CoarseEstimate
from artictwin.services.evaluation import AblationMode, SceneReport, variance_harness
from artictwin.services.geometry import JointModel, JointStateSequence, JointType, RigidTransform
from artictwin.services.interchange import read_dataset, read_ply, write_model_json
from artictwin.services.pipeline import ArticulationResult, PipelineResult, evaluate_result
from artictwin.services.refine import RefineReport, result_moving_maps
from artictwin.services.segment import SurfacePartition
from artictwin.services.synth import SceneSpec, scene_suite
from artictwin.commands.common import restrict_to_frames

logger = logging.getLogger(__name__)


def load_result(pred_dir: Path, gt_manifest: str | Path) -> PipelineResult:
    """Rebuild a PipelineResult from the files a pipeline run wrote."""
    articulation = ArticulationResult.model_validate_json((pred_dir / "articulation.json").read_text(encoding="utf-8"))
    dataset = restrict_to_frames(read_dataset(gt_manifest), articulation.frame_ids)

    coarse = None
    if (pred_dir / "coarse.json").is_file():
        coarse = CoarseEstimate.model_validate_json((pred_dir / "coarse.json").read_text(encoding="utf-8"))
    maps = None
    if (pred_dir / "refine.json").is_file():
        report = RefineReport.model_validate_json((pred_dir / "refine.json").read_text(encoding="utf-8"))
        maps = result_moving_maps(dataset, report.result_for(JointType(report.selected)))
    partition = None
    if (pred_dir / "partition.ply").is_file():
        _, labels, _ = read_ply(pred_dir / "partition.ply", "partition")
        partition = SurfacePartition.from_labels(labels)

    joint = states = cameras = None
    if articulation.joint is not None:
        joint = JointModel.from_dict(articulation.joint)
        states = JointStateSequence(np.asarray(articulation.states))
        cameras = [RigidTransform.from_matrix(c) for c in articulation.cameras]

    result = PipelineResult(
        report=SceneReport(name=articulation.name, seed=articulation.seed, mode=articulation.mode),
        articulation=articulation,
        dataset=dataset,
        coarse=coarse,
        partition=partition,
        joint=joint,
        states=states,
        cameras=cameras,
        moving_maps=maps,
        failures=[articulation.failure] if articulation.failure is not None else [],
    )
    return result


def handle_eval(args: argparse.Namespace, cfg: Settings) -> int:
    result = load_result(Path(args.pred), args.gt)
    report = evaluate_result(result, cfg, result.report.seed)
    if result.moving_maps is None and report.mode is not AblationMode.NO_REFINE:
        logger.warning("[eval] no refine.json in %s, refined mIOU not reported", args.pred)
    if result.failures:
        report = report.model_copy(update={"failure": result.failures[0]})
    write_model_json(Path(args.out), report)
    logger.info("[eval] %s -> %s", args.pred, args.out)
    return 0


def _load_specs(args: argparse.Namespace) -> list[SceneSpec]:
    if args.specs:
        files = sorted(Path(args.specs).glob("*.json"))
        if not files:
            raise ValueError(f"no scene spec JSON files in {args.specs}")
        return [SceneSpec.model_validate_json(f.read_text(encoding="utf-8")) for f in files]
    return scene_suite(args.count, noisy=args.noisy)


def handle_eval_variance(args: argparse.Namespace, cfg: Settings) -> int:
    specs = _load_specs(args)
    seeds = list(range(args.seed, args.seed + args.seeds))
    report = variance_harness(specs, seeds, cfg, AblationMode(args.mode), cfg.THREADS, args.iterations)
    write_model_json(Path(args.out), report)
    logger.info("[eval] variance scenes=%d seeds=%d -> %s", len(specs), len(seeds), args.out)
    return 0
