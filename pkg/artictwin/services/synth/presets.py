"""
Ready-made scenes used by tests, the acceptance script and the variance harness.

Both objects sit about 1.4 m in front of the frame-0 camera (z forward, y down):
  * cabinet door: a thin door plate hinged on its left edge, 6 cm in front of
    the body so the surface-attachment radius never bridges door and body;
  * drawer: a box that slides out of the body towards the camera; its sides
    are hidden inside the body at state 0 and appear as it opens.
"""
from __future__ import annotations

from typing import Optional

from artictwin.services.geometry import JointType
from artictwin.services.observations import Intrinsics
from artictwin.services.synth.models import JointSpec, PartSpec, SceneSpec

BODY_ID = 0
MOVABLE_ID = 1

# 96 x 72 grid: about 1.3 cm per pixel at the object, close to the 1 cm sampling
_GRID = {
    "height": 72,
    "width": 96,
    "intrinsics": Intrinsics(fx=90.0, fy=90.0, cx=48.0, cy=36.0),
}
_DENSITY = 10000.0  # points per square meter -> 1 cm spacing


def _body() -> PartSpec:
    return PartSpec(part_id=BODY_ID, center=(0.0, 0.0, 1.4), extent=(0.5, 0.6, 0.4), density=_DENSITY)


def _scene(
    parts: list[PartSpec],
    joint: JointSpec,
    final_state: float,
    frame_count: int,
    seed: int,
    camera_motion: bool,
    point_noise_std: float,
    mask_corruption: float,
    outlier_rate: Optional[float],
    **overrides,
) -> SceneSpec:
    fields = dict(
        seed=seed,
        parts=parts,
        movable_part=MOVABLE_ID,
        joint=joint,
        states=SceneSpec.linear_schedule(final_state, frame_count),
        retargeting=camera_motion,
        point_noise_std=point_noise_std,
        mask_corruption=mask_corruption,
        outlier_rate=outlier_rate,
        **_GRID,
    )
    fields.update(overrides)
    return SceneSpec(**fields)


def cabinet_door_scene(
    seed: int = 0,
    final_angle: float = 0.8,
    frame_count: int = 20,
    camera_motion: bool = True,
    point_noise_std: float = 0.0,
    mask_corruption: float = 0.0,
    outlier_rate: Optional[float] = None,
    **overrides,
) -> SceneSpec:
    """Revolute door swinging open towards the camera about a vertical hinge."""
    door = PartSpec(part_id=MOVABLE_ID, center=(0.0, 0.0, 1.13), extent=(0.4, 0.5, 0.02), density=_DENSITY)
    # y points down, so a positive angle about +y swings the free edge towards the camera
    hinge = JointSpec(joint_type=JointType.REVOLUTE, axis=(0.0, 1.0, 0.0), pivot=(-0.2, 0.0, 1.13))
    return _scene(
        [_body(), door], hinge, final_angle, frame_count, seed,
        camera_motion, point_noise_std, mask_corruption, outlier_rate, **overrides,
    )


def drawer_scene(
    seed: int = 0,
    final_distance: float = 0.2,
    frame_count: int = 20,
    camera_motion: bool = True,
    point_noise_std: float = 0.0,
    mask_corruption: float = 0.0,
    outlier_rate: Optional[float] = None,
    **overrides,
) -> SceneSpec:
    """Prismatic drawer pulled out of the body towards the camera."""
    drawer = PartSpec(part_id=MOVABLE_ID, center=(0.0, 0.1, 1.33), extent=(0.4, 0.2, 0.3), density=_DENSITY)
    slide = JointSpec(joint_type=JointType.PRISMATIC, axis=(0.0, 0.0, -1.0))
    return _scene(
        [_body(), drawer], slide, final_distance, frame_count, seed,
        camera_motion, point_noise_std, mask_corruption, outlier_rate, **overrides,
    )


def scene_suite(count: int, noisy: bool = False, first_seed: int = 0) -> list[SceneSpec]:
    """Alternating door / drawer scenes with seeds first_seed, first_seed + 1, ...

    The noisy variant uses 5 mm point noise, 20 % correspondence outliers and
    20 % moving-map corruption.
    """
    noise = dict(point_noise_std=0.005, mask_corruption=0.2, outlier_rate=0.2) if noisy else {}
    scenes = []
    for k in range(count):
        seed = first_seed + k
        build = cabinet_door_scene if k % 2 == 0 else drawer_scene
        scenes.append(build(seed=seed, **noise))
    return scenes
