from artictwin.services.geometry.chamfer import (
    NearestNeighborIndex,
    PointCloud,
    chamfer_one_directional,
    symmetric_chamfer,
    voxel_deduplicate,
)
from artictwin.services.geometry.enums import JointType
from artictwin.services.geometry.joints import (
    JointModel,
    JointStateSequence,
    PrismaticScrew,
    RevoluteScrew,
    ScrewDecomposition,
    apply_joint,
    line_line_distance,
    point_line_distance,
    screw_decompose,
)
from artictwin.services.geometry.transforms import (
    RigidTransform,
    compose_chain,
    fit_rigid_transform,
)

__all__ = [
    "JointModel",
    "JointStateSequence",
    "JointType",
    "NearestNeighborIndex",
    "PointCloud",
    "PrismaticScrew",
    "RevoluteScrew",
    "RigidTransform",
    "ScrewDecomposition",
    "apply_joint",
    "chamfer_one_directional",
    "compose_chain",
    "fit_rigid_transform",
    "line_line_distance",
    "point_line_distance",
    "screw_decompose",
    "symmetric_chamfer",
    "voxel_deduplicate",
]
