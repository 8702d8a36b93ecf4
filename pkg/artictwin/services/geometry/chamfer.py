"""Point clouds, exact nearest-neighbour index, Chamfer distances.

Distances are Euclidean (not squared) so every Chamfer value is in meters.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree


@dataclass(frozen=True, eq=False)
class PointCloud:
    """(N, 3) points with optional per-point weights in [0, 1] and integer labels."""

    points: np.ndarray
    weights: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.weights is not None:
            w = np.array(self.weights, dtype=np.float64).reshape(-1)
            if len(w) != len(pts):
                raise ValueError("weights must match point count")
            if np.any((w < 0) | (w > 1)):
                raise ValueError("weights must lie in [0, 1]")
            object.__setattr__(self, "weights", w)
        if self.labels is not None:
            lab = np.array(self.labels, dtype=np.int64).reshape(-1)
            if len(lab) != len(pts):
                raise ValueError("labels must match point count")
            object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return len(self.points)

    def select(self, mask_or_index: np.ndarray) -> PointCloud:
        return PointCloud(
            self.points[mask_or_index],
            None if self.weights is None else self.weights[mask_or_index],
            None if self.labels is None else self.labels[mask_or_index],
        )


class NearestNeighborIndex:
    """Exact nearest-neighbour queries over a fixed cloud (k-d tree).

    Read-only after construction; concurrent queries are safe.
    """

    def __init__(self, points: np.ndarray | PointCloud, workers: int = 1) -> None:
        pts = points.points if isinstance(points, PointCloud) else np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) == 0:
            raise ValueError("index needs a non-empty (N, 3) array")
        self.points = pts
        self.workers = workers
        self._tree = cKDTree(pts)

    def __len__(self) -> int:
        return len(self.points)

    def query(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Distances and indices of the nearest target point for each query."""
        q = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        if len(q) == 0:
            return np.zeros(0), np.zeros(0, dtype=np.int64)
        dist, idx = self._tree.query(q, k=1, workers=self.workers)
        return dist, idx.astype(np.int64)

    def query_radius_mask(self, queries: np.ndarray, radius: float) -> np.ndarray:
        """True for each query strictly closer than `radius` to some target point."""
        dist, _ = self.query(queries)
        return dist < radius


def chamfer_one_directional(
    query: np.ndarray | PointCloud,
    target_index: NearestNeighborIndex,
    per_point_weights: Optional[np.ndarray] = None,
) -> float:
    """Weighted mean distance from each query point to its nearest target point.

    Returns 0 when the weights sum to zero.
    """
    q = query.points if isinstance(query, PointCloud) else np.asarray(query, dtype=np.float64)
    if len(q) == 0:
        raise ValueError("query cloud must be non-empty")
    if per_point_weights is None:
        per_point_weights = query.weights if isinstance(query, PointCloud) else None
    w = np.ones(len(q)) if per_point_weights is None else np.asarray(per_point_weights, dtype=np.float64)
    total = float(w.sum())
    if total == 0.0:
        return 0.0
    dist, _ = target_index.query(q)
    return float(w @ dist / total)


def symmetric_chamfer(a: np.ndarray, b: np.ndarray, workers: int = 1) -> float:
    """Mean of the two one-directional Chamfer distances."""
    ab = chamfer_one_directional(a, NearestNeighborIndex(b, workers))
    ba = chamfer_one_directional(b, NearestNeighborIndex(a, workers))
    return 0.5 * (ab + ba)


def voxel_deduplicate(points: np.ndarray, voxel: float) -> np.ndarray:
    """Indices of the first point in each occupied voxel, in input order."""
    keys = np.floor(np.asarray(points) / voxel).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return np.sort(first)
