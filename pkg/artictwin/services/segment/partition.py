"""Segment-track bookkeeping and the movable / static split of P^O."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from artictwin.config import Settings, settings as default_settings
from artictwin.services.geometry import NearestNeighborIndex, PointCloud, RigidTransform
from artictwin.services.observations import FrameObservation, SegmentTrack

logger = logging.getLogger(__name__)

STATIC_LABEL = 0
MOVABLE_LABEL = 1


def classify_newly_observed(tracks: Iterable[SegmentTrack]) -> set[int]:
    """Ids of segments absent from frame 0; they have no counterpart in P^O."""
    tracks = list(tracks)
    if not tracks:
        raise ValueError("no segment tracks given")
    return {t.segment_id for t in tracks if not t.present_in_frame0}


@dataclass(frozen=True, eq=False)
class SurfacePartition:
    """Disjoint, exhaustive split of the P^O point indices."""

    movable: np.ndarray
    static: np.ndarray
    no_moving_pixels: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "movable", np.asarray(self.movable, dtype=np.int64))
        object.__setattr__(self, "static", np.asarray(self.static, dtype=np.int64))

    @property
    def size(self) -> int:
        return len(self.movable) + len(self.static)

    def labels(self) -> np.ndarray:
        out = np.full(self.size, STATIC_LABEL, dtype=np.int64)
        out[self.movable] = MOVABLE_LABEL
        return out

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> SurfacePartition:
        labels = np.asarray(labels)
        return cls(
            movable=np.nonzero(labels == MOVABLE_LABEL)[0],
            static=np.nonzero(labels != MOVABLE_LABEL)[0],
        )


def extract_movable_part(
    surface: PointCloud | np.ndarray,
    moving_map: np.ndarray,
    frame0: FrameObservation,
    cfg: Settings = default_settings,
    camera0: Optional[RigidTransform] = None,
    threshold: Optional[float] = None,
    radius: Optional[float] = None,
) -> SurfacePartition:
    """Points of P^O within `radius` of an unprojected frame-0 moving pixel.

    Moving pixels are valid pixels with map value > threshold. With no moving
    pixels the movable set is empty and the partition is flagged.
    """
    points = surface.points if isinstance(surface, PointCloud) else np.asarray(surface, dtype=np.float64)
    threshold = cfg.MOVING_THRESHOLD if threshold is None else threshold
    radius = cfg.ATTACH_RADIUS if radius is None else radius
    if moving_map.shape != frame0.valid.shape:
        raise ValueError(f"moving map {moving_map.shape} does not match frame grid {frame0.valid.shape}")

    moving = (moving_map > threshold) & frame0.valid
    everything = np.arange(len(points))
    if not moving.any():
        logger.info("segment.partition moving_pixels=0 surface=%d", len(points))
        return SurfacePartition(movable=np.zeros(0, dtype=np.int64), static=everything, no_moving_pixels=True)

    anchors = frame0.points[moving]
    if camera0 is not None:
        anchors = camera0.apply(anchors)
    near = NearestNeighborIndex(anchors, cfg.THREADS).query_radius_mask(points, radius)
    partition = SurfacePartition(movable=everything[near], static=everything[~near])
    logger.info(
        "segment.partition moving_pixels=%d movable=%d static=%d",
        int(moving.sum()), len(partition.movable), len(partition.static),
    )
    return partition
