"""
Single-stage commands: coarse, refine, segment.

Each reads a dataset manifest plus the JSON output of the stage before it, so
a run can be resumed or inspected stage by stage.
"""
import argparse
import logging
from pathlib import Path

from artictwin.config import Settings
from artictwin.services.coarse import CoarseEstimate, run_coarse
from artictwin.services.geometry import JointType, RigidTransform
from artictwin.services.interchange import write_loss_history, write_model_json, write_partition
from artictwin.services.refine import RefineReport, UnitMode, result_moving_maps, run_refine
from artictwin.services.segment import extract_movable_part
from artictwin.commands.common import load_subsampled, restrict_to_frames

logger = logging.getLogger(__name__)


def handle_coarse(args: argparse.Namespace, cfg: Settings) -> int:
    dataset = load_subsampled(args.data, cfg)
    estimate = run_coarse(dataset, cfg, args.seed)
    write_model_json(Path(args.out), estimate)
    logger.info("[coarse] voted=%s -> %s", estimate.voted_type.value, args.out)
    return 0


def handle_refine(args: argparse.Namespace, cfg: Settings) -> int:
    dataset = load_subsampled(args.data, cfg)
    coarse = None
    if args.coarse:
        coarse = CoarseEstimate.model_validate_json(Path(args.coarse).read_text(encoding="utf-8"))
        dataset = restrict_to_frames(dataset, coarse.frame_ids)
    mode = UnitMode.PIXELS if args.pixels else UnitMode.SEGMENTS
    outcome = run_refine(dataset, coarse, cfg, args.seed, mode, iterations=args.iterations)
    report_path = refine_report_path(Path(args.out))
    report_path.parent.mkdir(parents=True, exist_ok=True)
    write_model_json(report_path, outcome.report)
    for hypothesis, state in sorted(outcome.states.items(), key=lambda kv: kv[0].value):
        write_loss_history(report_path.parent / f"loss_history_{hypothesis.value}.csv", state.loss_history)
    logger.info("[refine] selected=%s -> %s", outcome.selection.joint_type.value, report_path)
    return 0


def refine_report_path(out: Path) -> Path:
    """`--out` names the report itself when it ends in .json, else a directory for it."""
    return out if out.suffix == ".json" else out / "refine.json"


def handle_segment(args: argparse.Namespace, cfg: Settings) -> int:
    dataset = load_subsampled(args.data, cfg)
    maps, camera0 = dataset.moving_maps, None
    if args.refine:
        report = RefineReport.model_validate_json(Path(args.refine).read_text(encoding="utf-8"))
        dataset = restrict_to_frames(dataset, report.frame_ids)
        chosen = report.result_for(JointType(report.selected))
        maps = result_moving_maps(dataset, chosen)
        camera0 = RigidTransform.from_matrix(chosen.cameras[0], project=True)
    partition = extract_movable_part(dataset.surface, maps[0], dataset.frames[0], cfg, camera0)
    write_partition(Path(args.out), dataset.surface.points, partition.labels())
    logger.info("[segment] movable=%d static=%d -> %s", len(partition.movable), len(partition.static), args.out)
    return 0
