"""
Acceptance suites on synthetic scenes.

    python -m scripts.run_acceptance [--count 100] [--seeds 10] [--threads 4]

  exact    noiseless scenes: joint, state and camera errors near zero
  noisy    5 mm noise, 20 % outliers / mask corruption: refinement beats coarse
  variance cross-seed std of refined axis error <= that of coarse
"""
import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from artictwin.config import load_settings
from artictwin.services.evaluation import build_datasets, run_suite, variance_harness
from artictwin.services.synth import scene_suite


def _check(name: str, ok: bool, detail: str) -> bool:
    print(f"  [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


def exact_suite(count: int, cfg) -> bool:
    print(f"exact recovery ({count} scenes)")
    report = run_suite(build_datasets(scene_suite(count), cfg.THREADS), cfg, seed=0, workers=cfg.THREADS)
    rows = report.scenes
    refined = [r.refined for r in rows]
    revolute = [r.refined.position_error for r in rows if r.refined.position_error is not None]
    ok = True
    ok &= _check("axis", max(m.axis_error for m in refined) < 1e-3, f"max {max(m.axis_error for m in refined):.2e} rad")
    ok &= _check("pivot", not revolute or max(revolute) < 1e-3, f"max {max(revolute, default=0.0):.2e} m")
    ok &= _check("state", max(m.state_error for m in refined) < 1e-3, f"max {max(m.state_error for m in refined):.2e}")
    ok &= _check("type", all(m.type_error == 0 for m in refined), f"{sum(m.type_error for m in refined)} wrong")
    rot = max(r.camera_rotation_error for r in rows)
    trans = max(r.camera_translation_error for r in rows)
    ok &= _check("camera", rot < 1e-6 and trans < 1e-6, f"rot {rot:.2e} rad, trans {trans:.2e} m")
    iou = min(r.partition_iou for r in rows if r.gt_type.value == "revolute")
    ok &= _check("partition", iou == 1.0, f"min door IoU {iou:.4f}")
    return ok


def noisy_suite(count: int, cfg) -> bool:
    print(f"noisy robustness ({count} scenes)")
    report = run_suite(build_datasets(scene_suite(count, noisy=True), cfg.THREADS), cfg, seed=0, workers=cfg.THREADS)
    coarse = np.array([r.coarse.axis_error for r in report.scenes])
    refined = np.array([r.refined.axis_error for r in report.scenes])
    maps = np.array([r.miou_refined for r in report.scenes if r.miou_refined is not None])
    ok = True
    ok &= _check("median refined axis", np.median(refined) < 0.05, f"{np.median(refined):.4f} rad")
    ok &= _check("refined <= coarse", np.mean(refined <= coarse) >= 0.8, f"{np.mean(refined <= coarse):.0%} of scenes")
    ok &= _check("mean refined < mean coarse", refined.mean() < coarse.mean(), f"{refined.mean():.4f} vs {coarse.mean():.4f}")
    ok &= _check("moving-map mIOU", len(maps) > 0 and maps.mean() >= 0.9, f"{maps.mean() if len(maps) else 0.0:.3f}")
    return ok


def variance(count: int, seeds: int, cfg) -> bool:
    print(f"variance harness ({count} scenes x {seeds} seeds)")
    report = variance_harness(scene_suite(count, noisy=True), range(seeds), cfg, workers=cfg.THREADS)
    coarse = report.across_seeds["coarse.axis_error"].std
    refined = report.across_seeds["refined.axis_error"].std
    return _check("cross-seed std", refined <= coarse, f"refined {refined:.4f} vs coarse {coarse:.4f}")


def main() -> int:
    parser = argparse.ArgumentParser(description="Synthetic acceptance suites.")
    parser.add_argument("--count", type=int, default=100)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--variance-count", type=int, default=20)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--config", default=None)
    args = parser.parse_args()
    cfg = load_settings(args.config, THREADS=args.threads)

    results = [exact_suite(args.count, cfg), noisy_suite(args.count, cfg), variance(args.variance_count, args.seeds, cfg)]
    print("\nall suites passed" if all(results) else "\nsome suites FAILED")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
