from artictwin.services.coarse.engine import (
    estimate_camera_poses,
    estimate_joint_pair,
    label_matches,
    process_pair,
    run_coarse,
    vote_and_average,
)
from artictwin.services.coarse.frames import frame_pairs, subsample_frames
from artictwin.services.coarse.models import (
    CoarseEstimate,
    HypothesisFit,
    JointCandidate,
    JointMotion,
    LabeledMatches,
    MatchRegion,
    PairResult,
)

__all__ = [
    "CoarseEstimate",
    "HypothesisFit",
    "JointCandidate",
    "JointMotion",
    "LabeledMatches",
    "MatchRegion",
    "PairResult",
    "estimate_camera_poses",
    "estimate_joint_pair",
    "frame_pairs",
    "label_matches",
    "process_pair",
    "run_coarse",
    "subsample_frames",
    "vote_and_average",
]
