"""Helpers shared by the command handlers."""
import logging
from pathlib import Path
from typing import Sequence

from artictwin.config import Settings
from artictwin.services.coarse import subsample_frames
from artictwin.services.interchange import read_dataset
from artictwin.services.observations import Dataset

logger = logging.getLogger(__name__)


def load_subsampled(manifest: str | Path, cfg: Settings) -> Dataset:
    """Read a dataset and keep the frames every stage works on."""
    dataset = read_dataset(manifest)
    return dataset.select_frames(subsample_frames(dataset.frame_count, cfg.TARGET_FRAME_COUNT))


def restrict_to_frames(dataset: Dataset, frame_ids: Sequence[int]) -> Dataset:
    """Sub-video holding exactly `frame_ids`, which an earlier stage selected."""
    lookup = dataset.position_of()
    missing = [f for f in frame_ids if f not in lookup]
    if missing:
        raise ValueError(f"frames {missing} are not in dataset {dataset.name}")
    return dataset.select_frames([lookup[f] for f in frame_ids])
