"""Seeded multi-run evaluation: scenes stay fixed, the pipeline seed varies."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

from artictwin.config import Settings, settings as default_settings
from artictwin.services.evaluation.report import AblationMode, RunReport, SceneReport, VarianceReport
from artictwin.services.observations import Dataset
from artictwin.services.synth import SceneSpec, generate_scene

logger = logging.getLogger(__name__)


def build_datasets(specs: Sequence[SceneSpec], workers: int = 1) -> list[Dataset]:
    return [generate_scene(spec, workers)[0] for spec in specs]


def run_suite(
    datasets: Sequence[Dataset],
    cfg: Settings = default_settings,
    seed: int = 0,
    mode: AblationMode = AblationMode.FULL,
    workers: int = 1,
    iterations: Optional[int] = None,
) -> RunReport:
    """One pipeline run per dataset under `seed`; rows keep the dataset order."""
    from artictwin.services.pipeline import run_pipeline

    def one(dataset: Dataset) -> SceneReport:
        return run_pipeline(dataset, cfg, seed, mode, iterations=iterations).report

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, datasets))
    else:
        rows = [one(d) for d in datasets]
    report = RunReport.build(rows, seed, mode)
    logger.info(
        "eval.suite seed=%d mode=%s scenes=%d failures=%d",
        seed, AblationMode(mode).value, len(rows), sum(1 for r in rows if r.failure is not None),
    )
    return report


def variance_harness(
    specs: Sequence[SceneSpec],
    seeds: Sequence[int],
    cfg: Settings = default_settings,
    mode: AblationMode = AblationMode.FULL,
    workers: int = 1,
    iterations: Optional[int] = None,
) -> VarianceReport:
    """Full pipeline per (scene, seed); cross-seed mean and std of the per-seed means."""
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("variance harness needs at least one seed")
    datasets = build_datasets(specs, workers)
    runs = [run_suite(datasets, cfg, seed, mode, workers, iterations) for seed in seeds]
    return VarianceReport.build(runs, seeds, mode)
