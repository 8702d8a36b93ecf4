"""Minimal-sample RANSAC over matched 3D point pairs.

Models are produced by a `fit` callable (None = degenerate sample) and scored
by inlier count; ties go to the lower truncated cost mean(min(r, radius)).
The winner is refit on its inliers.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Generic, Optional, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

M = TypeVar("M")


@dataclass(frozen=True, eq=False)
class RansacResult(Generic[M]):
    model: M
    residuals: np.ndarray  # per match, under the final model
    inliers: np.ndarray    # bool per match
    radius: float

    @property
    def inlier_count(self) -> int:
        return int(self.inliers.sum())

    @property
    def mean_inlier_residual(self) -> float:
        if not self.inliers.any():
            return float(self.residuals.mean())
        return float(self.residuals[self.inliers].mean())

    @property
    def truncated_cost(self) -> float:
        return truncated_cost(self.residuals, self.radius)


def truncated_cost(residuals: np.ndarray, radius: float) -> float:
    return float(np.minimum(residuals, radius).mean())


def ransac(
    src: np.ndarray,
    dst: np.ndarray,
    fit: Callable[[np.ndarray, np.ndarray], Optional[M]],
    residual: Callable[[M, np.ndarray, np.ndarray], np.ndarray],
    rng: np.random.Generator,
    iterations: int,
    sample_size: int,
    radius: float,
) -> Optional[RansacResult[M]]:
    """Best model over `iterations` random minimal samples, refit on its inliers.

    Returns None when every sample was degenerate.
    """
    n = len(src)
    if n < sample_size:
        return None

    best_model: Optional[M] = None
    best_key: tuple[int, float] | None = None
    for _ in range(iterations):
        sample = rng.choice(n, sample_size, replace=False)
        model = fit(src[sample], dst[sample])
        if model is None:
            continue
        r = residual(model, src, dst)
        key = (int(np.count_nonzero(r < radius)), -truncated_cost(r, radius))
        if best_key is None or key > best_key:
            best_model, best_key = model, key

    if best_model is None:
        return None

    r = residual(best_model, src, dst)
    inliers = r < radius
    if np.count_nonzero(inliers) >= sample_size:
        refit = fit(src[inliers], dst[inliers])
        if refit is not None:
            r_refit = residual(refit, src, dst)
            # keep the refit unless it loses consensus
            if np.count_nonzero(r_refit < radius) >= np.count_nonzero(inliers):
                best_model, r = refit, r_refit
                inliers = r < radius

    return RansacResult(model=best_model, residuals=r, inliers=inliers, radius=radius)
