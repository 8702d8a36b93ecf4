"""Frame subsampling and frame-pair selection."""
import numpy as np

_SLACK = 2  # videos up to target + slack frames are kept whole


def subsample_frames(frame_count: int, target: int = 20) -> list[int]:
    """Uniform-stride positions: ~`target` frames, always including first and last."""
    if frame_count < 2:
        raise ValueError("need at least 2 frames")
    if frame_count <= target + _SLACK:
        return list(range(frame_count))
    return np.linspace(0, frame_count - 1, target).round().astype(int).tolist()


def frame_pairs(count: int, window: int) -> list[tuple[int, int]]:
    """All position pairs (i, j), i < j <= i + window, in lexicographic order."""
    return [(i, j) for i in range(count) for j in range(i + 1, min(count, i + window + 1))]
