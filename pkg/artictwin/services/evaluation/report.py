"""Run reports: per-scene rows, failure records and mean / std aggregates."""
from __future__ import annotations

from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from artictwin.services.evaluation.metrics import CONVENTIONS, GeometryMetrics, JointMetrics
from artictwin.services.geometry import JointType

REPORT_SCHEMA_VERSION = 1


class PipelineStage(str, Enum):
    LOAD = "load"
    COARSE = "coarse"
    REFINE = "refine"
    SEGMENT = "segment"
    EVALUATE = "evaluate"


class AblationMode(str, Enum):
    FULL = "full"
    NO_REFINE = "no_refine"
    NO_COARSE = "no_coarse"
    NO_SEGMENT = "no_segment"


class FailureRecord(BaseModel):
    stage: PipelineStage
    error: str
    message: str


class Aggregate(BaseModel):
    mean: float
    std: float
    count: int


class SceneReport(BaseModel):
    name: str
    seed: int
    mode: AblationMode = AblationMode.FULL
    gt_type: Optional[JointType] = None
    predicted_type: Optional[JointType] = None
    failure: Optional[FailureRecord] = None
    coarse: Optional[JointMetrics] = None
    refined: Optional[JointMetrics] = None
    geometry: Optional[GeometryMetrics] = None
    partition_iou: Optional[float] = None
    no_moving_pixels: bool = False
    miou_refined: Optional[float] = None
    miou_input: Optional[float] = None
    camera_rotation_error: Optional[float] = None
    camera_translation_error: Optional[float] = None
    coarse_camera_rotation_error: Optional[float] = None
    coarse_camera_translation_error: Optional[float] = None

    def flat_metrics(self) -> Dict[str, float]:
        """Numeric metrics keyed 'group.metric' for aggregation."""
        out: Dict[str, float] = {}
        for prefix, block in (("coarse", self.coarse), ("refined", self.refined), ("geometry", self.geometry)):
            if block is None:
                continue
            for key, value in block.model_dump().items():
                if isinstance(value, bool):
                    value = float(value)
                if value is not None:
                    out[f"{prefix}.{key}"] = float(value)
        for key in (
            "partition_iou", "miou_refined", "miou_input",
            "camera_rotation_error", "camera_translation_error",
            "coarse_camera_rotation_error", "coarse_camera_translation_error",
        ):
            value = getattr(self, key)
            if value is not None:
                out[key] = float(value)
        return out


def aggregate(rows: List[Dict[str, float]]) -> Dict[str, Aggregate]:
    """Mean and population std per metric key, over the rows that carry it."""
    keys = sorted({k for row in rows for k in row})
    out = {}
    for key in keys:
        values = np.array([row[key] for row in rows if key in row], dtype=np.float64)
        out[key] = Aggregate(mean=float(values.mean()), std=float(values.std()), count=len(values))
    return out


class RunReport(BaseModel):
    schema_version: int = REPORT_SCHEMA_VERSION
    conventions: str = CONVENTIONS
    seed: int
    mode: AblationMode = AblationMode.FULL
    scenes: List[SceneReport] = Field(default_factory=list)
    aggregate: Dict[str, Aggregate] = Field(default_factory=dict)

    @classmethod
    def build(cls, scenes: List[SceneReport], seed: int, mode: AblationMode = AblationMode.FULL) -> RunReport:
        return cls(seed=seed, mode=mode, scenes=scenes, aggregate=aggregate([s.flat_metrics() for s in scenes]))

    def means(self) -> Dict[str, float]:
        return {k: v.mean for k, v in self.aggregate.items()}


class VarianceReport(BaseModel):
    """Cross-seed statistics of the per-seed mean metrics."""

    schema_version: int = REPORT_SCHEMA_VERSION
    conventions: str = CONVENTIONS
    seeds: List[int]
    mode: AblationMode = AblationMode.FULL
    runs: List[RunReport] = Field(default_factory=list)
    across_seeds: Dict[str, Aggregate] = Field(default_factory=dict)

    @classmethod
    def build(cls, runs: List[RunReport], seeds: List[int], mode: AblationMode = AblationMode.FULL) -> VarianceReport:
        return cls(seeds=seeds, mode=mode, runs=runs, across_seeds=aggregate([r.means() for r in runs]))
