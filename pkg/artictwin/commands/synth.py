"""
synth: write synthetic datasets (manifest + data files) for tests and demos.

  --kind door|drawer|suite   preset scene(s)
  --spec FILE                a SceneSpec JSON instead of a preset
"""
import argparse
import logging
from pathlib import Path

from artictwin.config import Settings
from artictwin.services.interchange import write_dataset, write_model_json
from artictwin.services.synth import SceneSpec, cabinet_door_scene, drawer_scene, generate_scene, scene_suite

logger = logging.getLogger(__name__)


def _specs(args: argparse.Namespace) -> list[SceneSpec]:
    if args.spec:
        return [SceneSpec.model_validate_json(Path(args.spec).read_text(encoding="utf-8"))]
    noise = dict(point_noise_std=0.005, mask_corruption=0.2, outlier_rate=0.2) if args.noisy else {}
    if args.kind == "door":
        return [cabinet_door_scene(seed=args.seed, frame_count=args.frames, **noise)]
    if args.kind == "drawer":
        return [drawer_scene(seed=args.seed, frame_count=args.frames, **noise)]
    return scene_suite(args.count, noisy=args.noisy, first_seed=args.seed)


def handle_synth(args: argparse.Namespace, cfg: Settings) -> int:
    out = Path(args.out)
    specs = _specs(args)
    for spec in specs:
        dataset, _ = generate_scene(spec, cfg.THREADS)
        target = out if len(specs) == 1 else out / dataset.name
        target.mkdir(parents=True, exist_ok=True)
        write_model_json(target / "scene.json", spec)
        manifest = write_dataset(dataset, target)
        logger.info("[synth] wrote %s", manifest)
    return 0
