from artictwin.services.synth.camera import camera_trajectory
from artictwin.services.synth.generator import SyntheticObservation, generate_scene, tracked_segment_ids
from artictwin.services.synth.models import JointSpec, PartSpec, SceneSpec
from artictwin.services.synth.presets import cabinet_door_scene, drawer_scene, scene_suite
from artictwin.services.synth.surface import canonical_surface, fuse_surface_cloud, fusion_viewpoints

__all__ = [
    "JointSpec",
    "PartSpec",
    "SceneSpec",
    "SyntheticObservation",
    "cabinet_door_scene",
    "camera_trajectory",
    "canonical_surface",
    "drawer_scene",
    "fuse_surface_cloud",
    "fusion_viewpoints",
    "generate_scene",
    "scene_suite",
    "tracked_segment_ids",
]
