from artictwin.services.interchange.formats import (
    read_correspondences,
    read_map,
    read_organized_cloud,
    read_ply,
    read_segment_map,
    sha256_of,
    write_correspondences,
    write_loss_history,
    write_map,
    write_model_json,
    write_organized_cloud,
    write_partition,
    write_ply,
    write_segment_map,
)
from artictwin.services.interchange.manifest import (
    MANIFEST_NAME,
    CorrespondenceRef,
    DatasetManifest,
    FileRef,
    GroundTruthRef,
    load_manifest,
    read_dataset,
    write_dataset,
)

__all__ = [
    "MANIFEST_NAME",
    "CorrespondenceRef",
    "DatasetManifest",
    "FileRef",
    "GroundTruthRef",
    "load_manifest",
    "read_correspondences",
    "read_dataset",
    "read_map",
    "read_organized_cloud",
    "read_ply",
    "read_segment_map",
    "sha256_of",
    "write_correspondences",
    "write_dataset",
    "write_loss_history",
    "write_map",
    "write_model_json",
    "write_organized_cloud",
    "write_partition",
    "write_ply",
    "write_segment_map",
]
