from artictwin.services.segment.partition import (
    MOVABLE_LABEL,
    STATIC_LABEL,
    SurfacePartition,
    classify_newly_observed,
    extract_movable_part,
)

__all__ = [
    "MOVABLE_LABEL",
    "STATIC_LABEL",
    "SurfacePartition",
    "classify_newly_observed",
    "extract_movable_part",
]
