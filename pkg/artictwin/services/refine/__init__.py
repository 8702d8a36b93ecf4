from artictwin.services.refine.engine import (
    RefineOutcome,
    Selection,
    coarse_initial_state,
    initial_state,
    optimize,
    random_initial_state,
    run_refine,
    select_joint_type,
)
from artictwin.services.refine.models import (
    HypothesisResult,
    LossRecord,
    MovingVector,
    RefineParams,
    RefineReport,
    RefineState,
    UnitLayout,
    UnitMode,
)
from artictwin.services.refine.moving import (
    init_moving_vector,
    initial_units,
    pixel_layout,
    result_moving_maps,
    segment_layout,
)
from artictwin.services.refine.objective import associate, build_problem, evaluate, forward_loss

__all__ = [
    "HypothesisResult",
    "LossRecord",
    "MovingVector",
    "RefineOutcome",
    "RefineParams",
    "RefineReport",
    "RefineState",
    "Selection",
    "UnitLayout",
    "UnitMode",
    "associate",
    "build_problem",
    "coarse_initial_state",
    "evaluate",
    "forward_loss",
    "init_moving_vector",
    "initial_state",
    "initial_units",
    "optimize",
    "pixel_layout",
    "random_initial_state",
    "result_moving_maps",
    "run_refine",
    "segment_layout",
    "select_joint_type",
]
