from artictwin.services.evaluation.harness import build_datasets, run_suite, variance_harness
from artictwin.services.evaluation.metrics import (
    CONVENTIONS,
    GeometryMetrics,
    JointMetrics,
    axis_angle,
    camera_metrics,
    failure_joint_metrics,
    geometry_metrics,
    joint_metrics,
    miou,
    partition_iou,
)
from artictwin.services.evaluation.report import (
    AblationMode,
    Aggregate,
    FailureRecord,
    PipelineStage,
    RunReport,
    SceneReport,
    VarianceReport,
    aggregate,
)

__all__ = [
    "CONVENTIONS",
    "AblationMode",
    "Aggregate",
    "FailureRecord",
    "GeometryMetrics",
    "JointMetrics",
    "PipelineStage",
    "RunReport",
    "SceneReport",
    "VarianceReport",
    "aggregate",
    "axis_angle",
    "build_datasets",
    "camera_metrics",
    "failure_joint_metrics",
    "geometry_metrics",
    "joint_metrics",
    "miou",
    "partition_iou",
    "run_suite",
    "variance_harness",
]
