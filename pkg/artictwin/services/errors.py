"""Domain exceptions.

Every stage error derives from ArticTwinError so run_pipeline can turn it into
a failure record. Plain caller mistakes stay ValueError.
"""
from __future__ import annotations


class ArticTwinError(Exception):
    """Base class for recoverable pipeline errors."""


# ── geometry ──────────────────────────────────────────────────────────────────

class DegenerateConfiguration(ArticTwinError):
    """Weighted point set too small or collinear for a unique rigid fit."""


# ── synth ─────────────────────────────────────────────────────────────────────

class EmptyFrame(ArticTwinError):
    def __init__(self, frame: int) -> None:
        super().__init__(f"frame {frame} sees zero object points")
        self.frame = frame


class EmptySurface(ArticTwinError):
    """Surface fusion requested for an object without parts."""


# ── coarse ────────────────────────────────────────────────────────────────────

class InsufficientStaticMatches(ArticTwinError):
    def __init__(self, frame: int, count: int) -> None:
        super().__init__(f"frame {frame}: only {count} usable static matches")
        self.frame = frame
        self.count = count


class DegenerateMotion(ArticTwinError):
    """Best RANSAC model carries no joint signal under the tested hypothesis."""


class NoValidPairs(ArticTwinError):
    """No frame pair produced a usable joint estimate."""


# ── refine / segment ──────────────────────────────────────────────────────────

class EmptySegment(ArticTwinError):
    def __init__(self, segment_id: int) -> None:
        super().__init__(f"segment {segment_id} has zero pixels in every frame")
        self.segment_id = segment_id


class NonFiniteLoss(ArticTwinError):
    def __init__(self, iteration: int, hypothesis: str) -> None:
        super().__init__(f"non-finite loss at iteration {iteration} ({hypothesis})")
        self.iteration = iteration
        self.hypothesis = hypothesis


# ── interchange ───────────────────────────────────────────────────────────────

class DatasetError(ArticTwinError):
    def __init__(self, path: str, field: str, message: str) -> None:
        super().__init__(f"{path} [{field}]: {message}")
        self.path = path
        self.field = field


class MissingFile(DatasetError):
    pass


class DimensionMismatch(DatasetError):
    pass


class BadChecksum(DatasetError):
    pass


class SchemaError(DatasetError):
    pass
