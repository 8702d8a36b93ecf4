"""
ArticTwin command line.

    python -m artictwin [--seed N] [--config FILE] [--threads N] <command> [--seed N] ...

`--seed` is accepted before or after the command. Dataset inputs take `--in`
(`--data` is kept as an alias).

Commands:
  synth        write synthetic dataset(s)
  coarse       camera poses + joint candidates -> coarse.json
  refine       joint optimisation for both hypotheses -> refine.json
  segment      static / movable split of P^O -> partition.ply
  eval         score stored outputs against ground truth -> report.json
  eval variance  seeded multi-run statistics
  pipeline     all of the above on one manifest (or a directory of them)
"""
import argparse
import logging
import sys
from typing import Optional, Sequence

from artictwin.commands import REGISTRY
from artictwin.config import Settings, load_settings
from artictwin.services.errors import ArticTwinError
from artictwin.services.evaluation import AblationMode

logger = logging.getLogger(__name__)


def _add_seed(p: argparse.ArgumentParser) -> None:
    # SUPPRESS keeps a global `--seed` given before the command
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="Seed for every random draw")


def _add_input(p: argparse.ArgumentParser, description: str = "Manifest file or dataset directory") -> None:
    p.add_argument("--in", "--data", dest="data", required=True, help=description)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artictwin", description="Articulated-object digital twins from interaction videos.")
    parser.add_argument("--seed", type=int, default=0, help="Seed for every random draw")
    parser.add_argument("--config", default=None, help="JSON file overriding settings")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (results do not depend on it)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="Write synthetic dataset(s)")
    _add_seed(p)
    p.add_argument("--kind", choices=["door", "drawer", "suite"], default="door")
    p.add_argument("--spec", default=None, help="SceneSpec JSON (overrides --kind)")
    p.add_argument("--count", type=int, default=10, help="Scenes in a suite")
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--noisy", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("coarse", help="Coarse cameras and joint candidates")
    _add_seed(p)
    _add_input(p)
    p.add_argument("--out", required=True, help="Output coarse.json")

    p = sub.add_parser("refine", help="Refine both joint hypotheses")
    _add_seed(p)
    _add_input(p)
    p.add_argument("--coarse", default=None, help="coarse.json; random start when omitted")
    p.add_argument("--pixels", action="store_true", help="Per-pixel moving probabilities")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument(
        "--out", required=True,
        help="Output refine.json (loss histories are written beside it), or a directory to hold both",
    )

    p = sub.add_parser("segment", help="Split P^O into static and movable points")
    _add_seed(p)
    _add_input(p)
    p.add_argument("--refine", default=None, help="refine.json; input moving maps when omitted")
    p.add_argument("--out", required=True, help="Output partition.ply")

    p = sub.add_parser("eval", help="Score outputs against ground truth")
    _add_seed(p)
    p.add_argument("--pred", help="Directory written by `pipeline`")
    p.add_argument("--gt", help="Ground-truth manifest")
    p.add_argument("--out", help="Output report.json")
    eval_sub = p.add_subparsers(dest="eval_command")
    v = eval_sub.add_parser("variance", help="Seeded multi-run statistics")
    _add_seed(v)
    v.add_argument("--specs", default=None, help="Directory of SceneSpec JSON files")
    v.add_argument("--count", type=int, default=10, help="Preset suite size when --specs is omitted")
    v.add_argument("--noisy", action="store_true")
    v.add_argument("--seeds", type=int, default=10, help="Number of seeds, starting at --seed")
    v.add_argument("--mode", choices=[m.value for m in AblationMode], default=AblationMode.FULL.value)
    v.add_argument("--iterations", type=int, default=None)
    v.add_argument("--out", default="variance.json")

    p = sub.add_parser("pipeline", help="Run every stage")
    _add_seed(p)
    _add_input(p, "Manifest, dataset directory or directory of datasets")
    p.add_argument("--mode", choices=[m.value for m in AblationMode], default=AblationMode.FULL.value)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--out", required=True)
    return parser


def _setup_logging(cfg: Settings) -> None:
    logging.basicConfig(
        level=getattr(logging, cfg.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)-8s %(name)s %(message)s",
        datefmt="%Y-%m-%dT%H:%M:%S",
    )


def _setup_sentry(cfg: Settings) -> None:
    if not cfg.SENTRY_DSN:
        return
    try:
        import sentry_sdk  # type: ignore
        sentry_sdk.init(dsn=cfg.SENTRY_DSN)
        logger.info("[cli] Sentry initialised")
    except ImportError:
        logger.warning("[cli] sentry_sdk not installed, Sentry disabled")


def _command_key(args: argparse.Namespace) -> str:
    if args.command == "eval" and getattr(args, "eval_command", None):
        return f"eval {args.eval_command}"
    return args.command


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    cfg = load_settings(args.config, THREADS=args.threads)
    _setup_logging(cfg)
    _setup_sentry(cfg)

    key = _command_key(args)
    if key == "eval" and not (args.pred and args.gt and args.out):
        parser.error("eval needs --pred, --gt and --out")
    handler = REGISTRY[key]
    logger.info("[cli] → %s seed=%d threads=%d", key, args.seed, cfg.THREADS)
    try:
        return handler(args, cfg)
    except ArticTwinError as exc:
        logger.error("[cli] ✗ %s failed: %s", key, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
