"""pipeline: every stage on one manifest, or on each manifest under a directory."""
import argparse
import logging
from pathlib import Path

from artictwin.config import Settings
from artictwin.services.errors import DatasetError
from artictwin.services.evaluation import AblationMode, RunReport
from artictwin.services.interchange import MANIFEST_NAME, read_dataset, write_model_json
from artictwin.services.pipeline import run_pipeline

logger = logging.getLogger(__name__)


def _manifests(path: Path) -> list[Path]:
    if path.is_file() or (path / MANIFEST_NAME).is_file():
        return [path]
    return sorted(p.parent for p in path.glob(f"*/{MANIFEST_NAME}"))


def handle_pipeline(args: argparse.Namespace, cfg: Settings) -> int:
    manifests = _manifests(Path(args.data))
    if not manifests:
        logger.error("[pipeline] no %s found under %s", MANIFEST_NAME, args.data)
        return 2
    out = Path(args.out)
    mode = AblationMode(args.mode)
    rows = []
    for manifest in manifests:
        try:
            dataset = read_dataset(manifest)
        except DatasetError as exc:
            logger.error("[pipeline] invalid dataset %s: %s", manifest, exc)
            return 2
        target = out if len(manifests) == 1 else out / dataset.name
        result = run_pipeline(dataset, cfg, args.seed, mode, target, args.iterations)
        rows.append(result.report)
    if len(manifests) > 1:
        write_model_json(out / "run_report.json", RunReport.build(rows, args.seed, mode))
    return 0
