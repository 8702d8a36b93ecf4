"""Gaussian random-walk camera trajectories.

The camera heads for a new target pose every 7-10 frames; targets are drawn
around the current pose. Positions are interpolated linearly and rotations
spherically between consecutive targets. Frame 0 is the identity pose.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from artictwin.services.geometry import RigidTransform
from artictwin.services.synth.models import SceneSpec


def camera_trajectory(spec: SceneSpec) -> list[RigidTransform]:
    """World-from-camera pose for each frame of the scene."""
    n = spec.frame_count
    still = (
        not spec.retargeting
        or (spec.camera_position_std == 0 and spec.camera_rotation_std == 0)
    )
    if still:
        return [RigidTransform.identity() for _ in range(n)]

    rng = np.random.default_rng([spec.seed, 0])
    lo, hi = spec.retarget_interval
    positions = np.zeros((n, 3))
    rotations = [Rotation.identity()] * n

    start_pos, start_rot = np.zeros(3), Rotation.identity()
    t0 = 0
    while t0 < n - 1:
        steps = int(rng.integers(lo, hi + 1))
        target_pos = start_pos + rng.normal(0.0, spec.camera_position_std, 3)
        target_rot = start_rot * Rotation.from_rotvec(rng.normal(0.0, spec.camera_rotation_std, 3))
        slerp = Slerp([0.0, 1.0], Rotation.concatenate([start_rot, target_rot]))
        for k in range(1, steps + 1):
            t = t0 + k
            if t >= n:
                break
            alpha = k / steps
            positions[t] = (1.0 - alpha) * start_pos + alpha * target_pos
            rotations[t] = slerp([alpha])[0]
        start_pos, start_rot = target_pos, target_rot
        t0 += steps

    return [
        RigidTransform.identity() if t == 0 else RigidTransform(rotations[t].as_matrix(), positions[t])
        for t in range(n)
    ]
