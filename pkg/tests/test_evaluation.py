"""Tests for the metrics, report aggregation and the seed-variance harness."""
import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st
from scipy.spatial.transform import Rotation

from artictwin.services.evaluation import (
    AblationMode,
    GeometryMetrics,
    JointMetrics,
    RunReport,
    SceneReport,
    aggregate,
    axis_angle,
    camera_metrics,
    failure_joint_metrics,
    geometry_metrics,
    joint_metrics,
    miou,
    partition_iou,
    variance_harness,
)
from artictwin.services.geometry import JointModel, JointStateSequence, JointType, RigidTransform
from artictwin.services.synth import cabinet_door_scene

DOOR = JointModel.create(JointType.REVOLUTE, [0.0, 1.0, 0.0], [-0.2, 0.0, 1.0])
STATES = JointStateSequence(np.array([0.0, 0.1, 0.2, 0.3]))

unit_vectors = st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 0.1
).map(lambda v: np.asarray(v) / np.linalg.norm(v))


class TestAxisAngle:
    def test_perpendicular(self):
        assert axis_angle(np.array([1.0, 0, 0]), np.array([0, 1.0, 0])) == pytest.approx(np.pi / 2)

    def test_opposite_directions_are_the_same_line(self):
        assert axis_angle(np.array([1.0, 0, 0]), np.array([-1.0, 0, 0])) == pytest.approx(0.0)

    @given(unit_vectors, unit_vectors)
    @hyp_settings(max_examples=50, deadline=None)
    def test_bounded_and_symmetric(self, a, b):
        angle = axis_angle(a, b)
        assert 0.0 <= angle <= np.pi / 2 + 1e-12
        assert angle == pytest.approx(axis_angle(b, a))
        assert angle == pytest.approx(axis_angle(-a, b))


class TestJointMetrics:
    def test_perfect_prediction(self):
        m = joint_metrics(DOOR, STATES, DOOR, STATES)
        assert m.axis_error == pytest.approx(0.0, abs=1e-12)
        assert m.position_error == pytest.approx(0.0, abs=1e-12)
        assert m.type_error == 0
        assert m.state_error == 0.0
        assert not m.failure

    def test_flipped_axis_negates_states(self):
        m = joint_metrics(DOOR.flipped(), STATES.negated(), DOOR, STATES)
        assert m.axis_error == pytest.approx(0.0, abs=1e-12)
        assert m.state_error == pytest.approx(0.0, abs=1e-12)

    def test_parallel_offset_axis(self):
        shifted = JointModel.create(JointType.REVOLUTE, [0.0, 1.0, 0.0], [-0.2, 0.5, 1.3])
        m = joint_metrics(shifted, STATES, DOOR, STATES)
        assert m.position_error == pytest.approx(0.3)

    def test_prismatic_prediction_on_revolute_truth(self):
        slide = JointModel.create(JointType.PRISMATIC, [0.0, 1.0, 0.0])
        m = joint_metrics(slide, STATES, DOOR, STATES)
        assert m.type_error == 1
        assert m.position_error == 1.0

    def test_prismatic_truth_has_no_position_error(self):
        slide = JointModel.create(JointType.PRISMATIC, [0.0, 0.0, -1.0])
        m = joint_metrics(slide, STATES, slide, STATES)
        assert m.position_error is None

    def test_failure_values(self):
        rev = failure_joint_metrics(JointType.REVOLUTE)
        assert rev.axis_error == pytest.approx(np.pi / 2)
        assert rev.state_error == pytest.approx(np.pi / 2)
        assert rev.position_error == 1.0
        assert rev.failure
        pri = joint_metrics(None, None, JointModel.create(JointType.PRISMATIC, [0, 0, 1.0]), STATES)
        assert pri.axis_error == pytest.approx(np.pi / 2)
        assert pri.state_error == 1.0
        assert pri.position_error is None

    def test_state_length_mismatch(self):
        with pytest.raises(ValueError):
            joint_metrics(DOOR, [0.0, 0.1], DOOR, STATES)


class TestGeometryMetrics:
    cloud = np.random.default_rng(0).uniform(-1, 1, (400, 3))
    labels = np.arange(400) < 150

    def test_identical_clouds(self):
        m = geometry_metrics(self.cloud, self.labels, self.cloud, self.labels, samples=None)
        assert m == GeometryMetrics(cd_whole=0.0, cd_movable=0.0, cd_static=0.0)

    def test_empty_part_scores_one(self):
        m = geometry_metrics(self.cloud, np.zeros(400, dtype=bool), self.cloud, self.labels, samples=None)
        assert m.cd_movable == 1.0
        assert m.cd_whole == 0.0

    def test_full_clouds_match_brute_force(self):
        other = self.cloud + 0.01
        d = np.linalg.norm(self.cloud[:, None, :] - other[None, :, :], axis=2)
        expected = 0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean())
        m = geometry_metrics(self.cloud, self.labels, other, self.labels, samples=None)
        assert m.cd_whole == pytest.approx(expected, rel=1e-12)

    def test_resampling_is_seeded(self):
        other = self.cloud + 0.01
        a = geometry_metrics(self.cloud, self.labels, other, self.labels, samples=200, seed=3)
        b = geometry_metrics(self.cloud, self.labels, other, self.labels, samples=200, seed=3)
        assert a == b


class TestMaskMetrics:
    def test_miou_extremes(self):
        maps = np.zeros((2, 2, 2))
        maps[:, 0, 0] = 1.0
        assert miou(maps, maps) == 1.0
        assert miou(maps, 1.0 - maps) == 0.0

    def test_miou_half_overlap(self):
        pred = np.array([[[1.0, 1.0, 0.0]]])
        gt = np.array([[[0.0, 1.0, 1.0]]])
        assert miou(pred, gt) == pytest.approx(1 / 3)

    def test_miou_empty_frames_agree(self):
        assert miou(np.zeros((1, 2, 2)), np.zeros((1, 2, 2))) == 1.0

    def test_miou_shape_mismatch(self):
        with pytest.raises(ValueError):
            miou(np.zeros((1, 2, 2)), np.zeros((2, 2, 2)))

    def test_partition_iou(self):
        assert partition_iou(np.array([1, 1, 0, 0]), np.array([0, 1, 1, 0])) == pytest.approx(1 / 3)


class TestCameraMetrics:
    def test_identical(self):
        poses = [RigidTransform.identity(), RigidTransform.from_translation([0.1, 0, 0])]
        assert camera_metrics(poses, poses) == (0.0, 0.0)

    def test_single_perturbed_frame(self):
        gt = [RigidTransform.identity() for _ in range(4)]
        pred = list(gt)
        pred[2] = RigidTransform(Rotation.from_rotvec([0.0, 0.0, np.pi / 2]).as_matrix(), [0.0, 0.0, 0.4])
        rot, trans = camera_metrics(pred, gt)
        assert rot == pytest.approx(np.pi / 2 / 4)
        assert trans == pytest.approx(0.1)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            camera_metrics([RigidTransform.identity()], [])


class TestAggregate:
    def test_mean_and_population_std(self):
        agg = aggregate([{"a": 1.0, "b": 2.0}, {"a": 3.0}])
        assert agg["a"].mean == 2.0
        assert agg["a"].std == 1.0
        assert agg["a"].count == 2
        assert agg["b"].count == 1

    def test_flat_metrics_skip_missing_blocks(self):
        report = SceneReport(
            name="x", seed=0,
            refined=JointMetrics(axis_error=0.1, type_error=0, state_error=0.2),
            miou_input=0.5,
        )
        flat = report.flat_metrics()
        assert flat["refined.axis_error"] == 0.1
        assert flat["refined.failure"] == 0.0
        assert "refined.position_error" not in flat
        assert "coarse.axis_error" not in flat
        assert flat["miou_input"] == 0.5

    def test_run_report_means(self):
        scenes = [
            SceneReport(name="a", seed=0, partition_iou=1.0),
            SceneReport(name="b", seed=0, partition_iou=0.5),
        ]
        run = RunReport.build(scenes, seed=0)
        assert run.means() == {"partition_iou": 0.75}


class TestVarianceHarness:
    def test_needs_a_seed(self):
        with pytest.raises(ValueError):
            variance_harness([], [])

    @pytest.mark.slow
    def test_single_seed_has_zero_spread(self, cfg):
        spec = cabinet_door_scene(seed=1, final_angle=0.4, frame_count=4)
        report = variance_harness([spec], [0], cfg, AblationMode.NO_REFINE)
        assert report.seeds == [0]
        assert len(report.runs) == 1
        assert all(agg.std == 0.0 for agg in report.across_seeds.values())
