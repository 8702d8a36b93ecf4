"""Tests for the synthetic scene generator."""
import numpy as np
import pytest
from pydantic import ValidationError

from artictwin.services.errors import EmptySurface
from artictwin.services.geometry import JointType, NearestNeighborIndex, apply_joint
from artictwin.services.synth import (
    SceneSpec,
    cabinet_door_scene,
    camera_trajectory,
    canonical_surface,
    drawer_scene,
    fuse_surface_cloud,
    fusion_viewpoints,
    generate_scene,
    scene_suite,
    tracked_segment_ids,
)
from artictwin.services.synth.models import JointSpec, PartSpec
from artictwin.services.synth.surface import FACES_PER_PART, fused_indices


class TestSceneSpec:
    def test_schedule_must_start_at_zero(self):
        spec = cabinet_door_scene()
        with pytest.raises(ValidationError):
            SceneSpec(**{**spec.model_dump(), "states": [0.1, 0.2]})

    def test_schedule_must_be_monotone(self):
        spec = cabinet_door_scene()
        with pytest.raises(ValidationError):
            SceneSpec(**{**spec.model_dump(), "states": [0.0, 0.3, 0.1]})

    def test_single_frame_rejected(self):
        spec = cabinet_door_scene()
        with pytest.raises(ValidationError):
            SceneSpec(**{**spec.model_dump(), "states": [0.0]})

    def test_outlier_rate_defaults_to_mask_corruption(self):
        assert cabinet_door_scene(mask_corruption=0.2).effective_outlier_rate == 0.2
        assert cabinet_door_scene(mask_corruption=0.2, outlier_rate=0.0).effective_outlier_rate == 0.0

    def test_suite_alternates_joint_types(self):
        suite = scene_suite(4, first_seed=10)
        assert [s.seed for s in suite] == [10, 11, 12, 13]
        assert [s.joint.joint_type.value for s in suite] == ["revolute", "prismatic", "revolute", "prismatic"]

    def test_json_round_trip(self):
        spec = drawer_scene(seed=2, point_noise_std=0.005)
        assert SceneSpec.model_validate_json(spec.model_dump_json()) == spec


class TestCameraTrajectory:
    def test_first_pose_is_identity(self, door_spec):
        cams = camera_trajectory(door_spec)
        assert len(cams) == door_spec.frame_count
        np.testing.assert_array_equal(cams[0].as_matrix(), np.eye(4))

    def test_static_camera_without_retargeting(self):
        cams = camera_trajectory(cabinet_door_scene(camera_motion=False, frame_count=5))
        for cam in cams:
            np.testing.assert_array_equal(cam.as_matrix(), np.eye(4))

    def test_seeded(self, door_spec):
        a, b = camera_trajectory(door_spec), camera_trajectory(door_spec)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.as_matrix(), y.as_matrix())
        moved = max(c.translation_error(a[0]) for c in a)
        assert moved > 0.0


class TestGenerateScene:
    def test_shapes(self, door, door_spec):
        dataset, gt = door
        T, H, W = door_spec.frame_count, door_spec.height, door_spec.width
        assert dataset.frame_count == T
        assert dataset.moving_maps.shape == (T, H, W)
        assert dataset.segment_labels.shape == (T, H, W)
        assert gt.moving_maps.shape == (T, H, W)
        assert len(gt.surface_labels) == len(dataset.surface)
        assert gt.states.states[0] == 0.0

    def test_deterministic(self, door_spec, door):
        again, _ = generate_scene(door_spec)
        dataset, _ = door
        for a, b in zip(dataset.frames, again.frames):
            np.testing.assert_array_equal(a.points, b.points)
        np.testing.assert_array_equal(dataset.moving_maps, again.moving_maps)
        np.testing.assert_array_equal(dataset.surface.points, again.surface.points)
        for a, b in zip(dataset.correspondences, again.correspondences):
            np.testing.assert_array_equal(a.idx_a, b.idx_a)
            np.testing.assert_array_equal(a.idx_b, b.idx_b)

    def test_threads_do_not_change_output(self, door_spec, door):
        again, _ = generate_scene(door_spec, workers=3)
        for a, b in zip(door[0].frames, again.frames):
            np.testing.assert_array_equal(a.points, b.points)

    def test_frames_are_posed_surface_points(self, door, door_spec):
        dataset, gt = door
        canonical = canonical_surface(door_spec)
        movable = canonical.part_labels == gt.movable_part
        for t in (0, dataset.frame_count - 1):
            posed = canonical.points.copy()
            posed[movable] = apply_joint(gt.joint, gt.states.states[t]).apply(canonical.points[movable])
            world = gt.cameras[t].apply(dataset.frames[t].valid_points())
            dist, _ = NearestNeighborIndex(posed).query(world)
            assert dist.max() < 1e-9

    def test_surface_is_a_subset_of_the_canonical_surface(self, door):
        dataset, gt = door
        dist, idx = NearestNeighborIndex(gt.canonical_points).query(dataset.surface.points)
        assert dist.max() == 0.0
        np.testing.assert_array_equal(gt.canonical_labels[idx], gt.surface_labels)

    def test_clean_maps_equal_ground_truth(self, door):
        dataset, gt = door
        np.testing.assert_array_equal(dataset.moving_maps, gt.moving_maps)
        assert set(np.unique(gt.moving_maps)) <= {0.0, 1.0}
        assert gt.moving_maps[0].any()

    def test_clean_correspondences_are_exact(self, door):
        dataset, gt = door
        pos = dataset.position_of()
        corr = dataset.correspondences[0]
        a, b = pos[corr.frame_a], pos[corr.frame_b]
        assert np.all(corr.confidence == 1.0)
        pa = gt.cameras[a].apply(dataset.frames[a].flat_points[corr.idx_a])
        pb = gt.cameras[b].apply(dataset.frames[b].flat_points[corr.idx_b])
        static = gt.moving_maps[a].reshape(-1)[corr.idx_a] == 0
        np.testing.assert_allclose(pa[static], pb[static], atol=1e-12)

    def test_noise_corrupts_maps_and_adds_outliers(self):
        clean, _ = generate_scene(cabinet_door_scene(seed=1, frame_count=3))
        noisy, gt = generate_scene(cabinet_door_scene(seed=1, frame_count=3, mask_corruption=0.2, point_noise_std=0.005))
        assert np.any(noisy.moving_maps != gt.moving_maps)
        assert len(noisy.correspondences[0]) > len(clean.correspondences[0])
        assert np.any(noisy.correspondences[0].confidence < 1.0)


class TestTrackedSegments:
    def test_frame0_segments_are_never_offset(self, door_spec, door):
        dataset, _ = door
        offset = FACES_PER_PART * (max(p.part_id for p in door_spec.parts) + 1)
        frame0 = dataset.segment_labels[0]
        assert frame0[frame0 >= 0].max() < offset

    def test_hidden_geometry_gets_its_own_segments(self, door_spec):
        canonical = canonical_surface(door_spec)
        ids = tracked_segment_ids(door_spec, canonical, camera_trajectory(door_spec)[0])
        offset = FACES_PER_PART * (max(p.part_id for p in door_spec.parts) + 1)
        assert np.any(ids >= offset)
        assert np.all(ids % offset == canonical.segment_ids)


def _lone_box(**overrides) -> SceneSpec:
    fields = dict(
        parts=[PartSpec(part_id=0, center=(0.0, 0.0, 1.4), extent=(0.3, 0.2, 0.25), density=2500.0)],
        movable_part=0,
        joint=JointSpec(joint_type=JointType.PRISMATIC, axis=(0.0, 0.0, -1.0)),
        states=[0.0, 0.05],
        fusion_views=12,
    )
    fields.update(overrides)
    return SceneSpec(**fields)


class TestFuseSurfaceCloud:
    def test_every_face_is_observed(self):
        spec = _lone_box()
        canonical = canonical_surface(spec)
        idx = fused_indices(spec, canonical)
        assert set(canonical.segment_ids[idx].tolist()) == set(range(FACES_PER_PART))

    def test_points_come_from_the_canonical_surface(self):
        spec = _lone_box()
        fused = fuse_surface_cloud(spec)
        dist, _ = NearestNeighborIndex(canonical_surface(spec).points).query(fused.points)
        assert dist.max() == 0.0
        assert np.all(fused.labels == 0)

    def test_repeated_views_change_nothing(self):
        spec = _lone_box()
        views = fusion_viewpoints(spec)
        once = fuse_surface_cloud(spec, views)
        twice = fuse_surface_cloud(spec, list(views) + list(views))
        np.testing.assert_array_equal(twice.points, once.points)
        np.testing.assert_array_equal(twice.labels, once.labels)

    def test_more_views_never_lose_points(self):
        spec = _lone_box()
        few = len(fuse_surface_cloud(spec, fusion_viewpoints(spec, 3)))
        assert len(fuse_surface_cloud(spec)) >= few

    def test_scene_without_parts(self):
        with pytest.raises(EmptySurface):
            fuse_surface_cloud(_lone_box(parts=[]))


class TestGroundTruthMovingMaps:
    def test_frame0_looks_ahead_to_frame1(self):
        dataset, gt = generate_scene(_lone_box(states=[0.0, 0.05, 0.1], retargeting=False))
        # the lone box is the movable part, so every pixel that sees it moves
        np.testing.assert_array_equal(gt.moving_maps[0] > 0, dataset.frames[0].valid)

    def test_part_at_rest_until_frame1_is_static_in_frame0(self):
        _, gt = generate_scene(_lone_box(states=[0.0, 0.0, 0.05], retargeting=False))
        assert not gt.moving_maps[0].any()
        assert not gt.moving_maps[1].any()
        assert gt.moving_maps[2].any()
