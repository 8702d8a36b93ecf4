"""Moving-vector initialisation and the pixel -> unit layout."""
from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from scipy.special import logit

from artictwin.services.errors import EmptySegment
from artictwin.services.observations import Dataset, SegmentTrack
from artictwin.services.refine.models import HypothesisResult, MovingVector, UnitLayout, UnitMode
from artictwin.services.segment import classify_newly_observed

logger = logging.getLogger(__name__)


def init_moving_vector(
    tracks: Sequence[SegmentTrack],
    moving_maps: np.ndarray,
    clamp: tuple[float, float] = (0.02, 0.98),
    threshold: float = 0.5,
) -> MovingVector:
    """v_d = moving-pixel share of segment d over all frames, clamped, as logits.

    Only segments present in frame 0 get a unit; they are ordered by id.
    """
    for track in tracks:
        if not track.masks.any():
            raise EmptySegment(track.segment_id)
    newly = classify_newly_observed(tracks)
    kept = sorted((t for t in tracks if t.segment_id not in newly), key=lambda t: t.segment_id)
    moving = np.asarray(moving_maps) >= threshold
    shares = np.array([(t.masks & moving).sum() / t.masks.sum() for t in kept], dtype=np.float64)
    probs = np.clip(shares, *clamp)
    return MovingVector(
        logits=logit(probs),
        unit_ids=np.array([t.segment_id for t in kept], dtype=np.int64),
    )


def segment_layout(dataset: Dataset, unit_ids: np.ndarray) -> UnitLayout:
    """Units = tracked segments present in frame 0, in the order of `unit_ids`."""
    labels = dataset.segment_labels.reshape(dataset.frame_count, -1)
    valid = np.stack([f.flat_valid for f in dataset.frames])
    lookup = {int(s): k for k, s in enumerate(unit_ids)}
    unit_index = np.full(labels.shape, -1, dtype=np.int64)
    for seg, k in lookup.items():
        unit_index[(labels == seg) & valid] = k
    tracked = set(np.unique(labels[labels >= 0]).tolist())
    newly = tuple(sorted(tracked - set(lookup)))
    return UnitLayout(
        mode=UnitMode.SEGMENTS,
        unit_index=unit_index,
        unit_count=len(unit_ids),
        height=dataset.height,
        width=dataset.width,
        unit_ids=np.asarray(unit_ids, dtype=np.int64),
        newly_observed=newly,
    )


def pixel_layout(dataset: Dataset) -> UnitLayout:
    """Every valid pixel of every frame is its own unit; nothing is filtered."""
    valid = np.stack([f.flat_valid for f in dataset.frames])
    unit_index = np.full(valid.shape, -1, dtype=np.int64)
    unit_index[valid] = np.arange(int(valid.sum()))
    return UnitLayout(
        mode=UnitMode.PIXELS,
        unit_index=unit_index,
        unit_count=int(valid.sum()),
        height=dataset.height,
        width=dataset.width,
    )


def pixel_moving_vector(
    layout: UnitLayout,
    moving_maps: np.ndarray,
    clamp: tuple[float, float] = (0.02, 0.98),
    threshold: float = 0.5,
) -> MovingVector:
    flat = np.asarray(moving_maps).reshape(layout.unit_index.shape)
    inside = layout.unit_index >= 0
    probs = np.empty(layout.unit_count)
    probs[layout.unit_index[inside]] = (flat[inside] >= threshold).astype(np.float64)
    return MovingVector(logits=logit(np.clip(probs, *clamp)))


def initial_units(
    dataset: Dataset,
    mode: UnitMode,
    moving_maps: np.ndarray,
    clamp: tuple[float, float],
    threshold: float,
) -> tuple[UnitLayout, MovingVector]:
    """Layout and initial moving vector for the chosen unit mode."""
    if mode is UnitMode.PIXELS:
        layout = pixel_layout(dataset)
        return layout, pixel_moving_vector(layout, moving_maps, clamp, threshold)
    vector = init_moving_vector(dataset.tracks(), moving_maps, clamp, threshold)
    layout = segment_layout(dataset, vector.unit_ids)
    logger.info(
        "refine.units mode=%s units=%d newly_observed=%d",
        mode.value, layout.unit_count, len(layout.newly_observed),
    )
    return layout, vector


def result_moving_maps(dataset: Dataset, result: HypothesisResult) -> np.ndarray:
    """Moving maps of a stored hypothesis result, re-expanded over `dataset`'s grid."""
    if result.unit_mode is UnitMode.PIXELS:
        layout = pixel_layout(dataset)
    else:
        layout = segment_layout(dataset, np.asarray(result.unit_ids or [], dtype=np.int64))
    probs = np.asarray(result.probabilities, dtype=np.float64)
    if len(probs) != layout.unit_count:
        raise ValueError(f"{len(probs)} probabilities for {layout.unit_count} units")
    return layout.moving_maps(probs)
