"""Tests for the moving vector, the refinement objective, Adam and joint-type selection."""
import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st
from scipy.spatial.transform import Rotation

from artictwin.config import Settings
from artictwin.services.coarse import run_coarse
from artictwin.services.errors import EmptySegment, NonFiniteLoss
from artictwin.services.evaluation import axis_angle
from artictwin.services.geometry import JointModel, JointType, NearestNeighborIndex, RigidTransform, line_line_distance
from artictwin.services.observations import SegmentTrack
from artictwin.services.refine import (
    LossRecord,
    RefineParams,
    RefineState,
    UnitLayout,
    UnitMode,
    associate,
    build_problem,
    evaluate,
    forward_loss,
    init_moving_vector,
    initial_state,
    initial_units,
    optimize,
    pixel_layout,
    result_moving_maps,
    run_refine,
    select_joint_type,
)
from artictwin.services.refine.optimizer import Adam


def _refine_settings(**overrides) -> Settings:
    return Settings(ADAM_ITERATIONS=40, THREADS=1).with_overrides(**overrides)


class TestAdam:
    def test_first_step_moves_by_learning_rate(self):
        params = {"x": np.array([1.0, -2.0])}
        Adam(lr=0.01).step(params, {"x": 2.0 * params["x"]})
        np.testing.assert_allclose(params["x"], [0.99, -1.99], atol=1e-8)

    def test_frozen_entries_never_move(self):
        params = {"x": np.array([1.0, 1.0])}
        adam = Adam(lr=0.1, frozen={"x": np.array([True, False])})
        for _ in range(10):
            adam.step(params, {"x": 2.0 * params["x"]})
        assert params["x"][0] == 1.0
        assert params["x"][1] < 1.0

    def test_minimises_a_quadratic(self):
        params = {"x": np.array([3.0])}
        adam = Adam(lr=0.05)
        for _ in range(2000):
            adam.step(params, {"x": 2.0 * (params["x"] - 1.0)})
        assert abs(params["x"][0] - 1.0) < 0.1


class TestMovingVector:
    def _tracks(self):
        full = np.ones((2, 2, 2), dtype=bool)
        corner = np.zeros((2, 2, 2), dtype=bool)
        corner[:, 0, 0] = True
        late = np.zeros((2, 2, 2), dtype=bool)
        late[1, 1, 1] = True
        return [SegmentTrack(7, late), SegmentTrack(1, corner), SegmentTrack(0, full)]

    def _maps(self):
        maps = np.zeros((2, 2, 2))
        maps[0, 0, 0] = 1.0
        maps[1, 0, :] = 1.0
        return maps

    def test_shares_over_all_frames(self):
        vector = init_moving_vector(self._tracks(), self._maps())
        np.testing.assert_array_equal(vector.unit_ids, [0, 1])
        np.testing.assert_allclose(vector.probabilities, [3 / 8, 0.98], atol=1e-12)

    def test_newly_observed_segments_get_no_unit(self):
        vector = init_moving_vector(self._tracks(), self._maps())
        assert 7 not in vector.unit_ids
        assert len(vector) == 2

    def test_clamped_to_range(self):
        low = init_moving_vector(self._tracks(), np.zeros((2, 2, 2)), clamp=(0.1, 0.9))
        high = init_moving_vector(self._tracks(), np.ones((2, 2, 2)), clamp=(0.1, 0.9))
        np.testing.assert_allclose(low.probabilities, [0.1, 0.1], atol=1e-12)
        np.testing.assert_allclose(high.probabilities, [0.9, 0.9], atol=1e-12)

    def test_empty_segment_raises(self):
        tracks = self._tracks() + [SegmentTrack(3, np.zeros((2, 2, 2), dtype=bool))]
        with pytest.raises(EmptySegment):
            init_moving_vector(tracks, self._maps())

    def test_segment_layout_excludes_untracked_and_invalid_pixels(self, door):
        dataset, _ = door
        layout, vector = initial_units(dataset, UnitMode.SEGMENTS, dataset.moving_maps, (0.02, 0.98), 0.5)
        assert layout.unit_count == len(vector)
        valid = np.stack([f.flat_valid for f in dataset.frames])
        assert np.all(layout.unit_index[~valid] == -1)
        labels = dataset.segment_labels.reshape(dataset.frame_count, -1)
        for seg in layout.newly_observed:
            assert np.all(layout.unit_index[labels == seg] == -1)

    def test_pixel_layout_covers_every_valid_pixel(self, door):
        dataset, _ = door
        layout = pixel_layout(dataset)
        valid = np.stack([f.flat_valid for f in dataset.frames])
        assert layout.unit_count == int(valid.sum())
        assert np.all(layout.unit_index[valid] >= 0)


def _gt_logits(layout: UnitLayout, maps: np.ndarray) -> np.ndarray:
    flat = maps.reshape(layout.unit_index.shape)
    inside = layout.unit_index >= 0
    logits = np.empty(layout.unit_count)
    logits[layout.unit_index[inside]] = np.where(flat[inside] >= 0.5, 1000.0, -1000.0)
    return logits


def _gt_params(dataset, gt, logits) -> RefineParams:
    return RefineParams(
        camera=np.zeros((dataset.frame_count, 6)),
        axis=gt.joint.axis.copy(),
        pivot=gt.joint.pivot.copy(),
        states=gt.states.states.copy(),
        logits=logits,
    )


class TestObjective:
    def test_zero_at_ground_truth(self, door):
        dataset, gt = door
        layout = pixel_layout(dataset)
        index = NearestNeighborIndex(gt.canonical_points)
        problem = build_problem(dataset, layout, gt.cameras, index, JointType.REVOLUTE)
        record = forward_loss(_gt_params(dataset, gt, _gt_logits(layout, gt.moving_maps)), problem)
        assert record.total < 1e-6

    def test_wrong_state_costs(self, door):
        dataset, gt = door
        layout = pixel_layout(dataset)
        index = NearestNeighborIndex(gt.canonical_points)
        problem = build_problem(dataset, layout, gt.cameras, index, JointType.REVOLUTE)
        params = _gt_params(dataset, gt, _gt_logits(layout, gt.moving_maps))
        params.states[1:] += 0.2
        assert forward_loss(params, problem).dynamic > 1e-3

    def test_collapsed_axis_raises(self, door):
        dataset, gt = door
        layout = pixel_layout(dataset)
        problem = build_problem(dataset, layout, gt.cameras, NearestNeighborIndex(dataset.surface.points), JointType.REVOLUTE)
        params = _gt_params(dataset, gt, np.zeros(layout.unit_count))
        params.axis[:] = 0.0
        with pytest.raises(FloatingPointError):
            forward_loss(params, problem)

    @given(st.integers(0, 2**32 - 1))
    @hyp_settings(max_examples=5, deadline=None)
    def test_surface_order_does_not_change_the_loss(self, door, order_seed):
        dataset, gt = door
        layout = pixel_layout(dataset)
        params = _gt_params(dataset, gt, np.zeros(layout.unit_count))
        params.states[1:] += 0.1
        surface = np.asarray(dataset.surface.points)
        shuffled = surface[np.random.default_rng(order_seed).permutation(len(surface))]
        before, after = (
            forward_loss(params, build_problem(dataset, layout, gt.cameras, NearestNeighborIndex(pts), JointType.REVOLUTE))
            for pts in (surface, shuffled)
        )
        assert after.static == pytest.approx(before.static, rel=1e-12)
        assert after.dynamic == pytest.approx(before.dynamic, rel=1e-12)

    @pytest.mark.parametrize("hypothesis", [JointType.REVOLUTE, JointType.PRISMATIC])
    def test_gradient_matches_finite_differences(self, door, hypothesis):
        dataset, gt = door
        layout, vector = initial_units(dataset, UnitMode.SEGMENTS, dataset.moving_maps, (0.02, 0.98), 0.5)
        problem = build_problem(dataset, layout, gt.cameras, NearestNeighborIndex(dataset.surface.points), hypothesis)

        rng = np.random.default_rng(11)
        T = dataset.frame_count
        camera = np.zeros((T, 6))
        camera[1:] = rng.normal(scale=5e-3, size=(T - 1, 6))
        states = gt.states.states + rng.normal(scale=0.05, size=T)
        states[0] = 0.0
        revolute = hypothesis is JointType.REVOLUTE
        params = RefineParams(
            camera=camera,
            axis=gt.joint.axis + rng.normal(scale=0.05, size=3),
            pivot=gt.joint.pivot + rng.normal(scale=0.01, size=3) if revolute else np.zeros(3),
            states=states,
            logits=rng.normal(size=layout.unit_count),
        )

        association = associate(params, problem, seed=0, fraction=0.3)
        _, grads = evaluate(params, problem, association)

        free = [("camera", (t, k)) for t in range(1, T) for k in range(6)]
        free += [("axis", (k,)) for k in range(3)]
        free += [("states", (t,)) for t in range(1, T)]
        free += [("logits", (k,)) for k in range(min(5, layout.unit_count))]
        if revolute:
            free += [("pivot", (k,)) for k in range(3)]

        h = 1e-5
        checked = 0
        for name, idx in free:
            plus, minus = params.copy(), params.copy()
            getattr(plus, name)[idx] += h
            getattr(minus, name)[idx] -= h
            numeric = (
                evaluate(plus, problem, association, with_grad=False)[0].total
                - evaluate(minus, problem, association, with_grad=False)[0].total
            ) / (2 * h)
            analytic = grads[name][idx]
            if abs(analytic) > 1e-8:
                checked += 1
                assert abs(analytic - numeric) <= 1e-4 * abs(analytic), f"{name}{idx}: {analytic} vs {numeric}"
        assert checked > len(free) // 2

    def test_frozen_entries_have_no_gradient(self, door):
        dataset, gt = door
        layout = pixel_layout(dataset)
        problem = build_problem(dataset, layout, gt.cameras, NearestNeighborIndex(dataset.surface.points), JointType.PRISMATIC)
        params = _gt_params(dataset, gt, np.zeros(layout.unit_count))
        params.pivot[:] = 0.0
        _, grads = evaluate(params, problem, associate(params, problem, fraction=0.2))
        assert np.all(grads["camera"][0] == 0.0)
        assert grads["states"][0] == 0.0
        assert np.all(grads["pivot"] == 0.0)


class TestOptimize:
    def _start(self, dataset, gt, state_offset=0.1):
        layout, vector = initial_units(dataset, UnitMode.SEGMENTS, dataset.moving_maps, (0.02, 0.98), 0.5)
        states = gt.states.states + state_offset
        return initial_state(JointType.REVOLUTE, gt.cameras, gt.joint, states, vector, layout)

    def test_reduces_loss(self, door):
        dataset, gt = door
        cfg = _refine_settings(ADAM_ITERATIONS=60, SUBSAMPLE_FRACTION=1.0)
        start = self._start(dataset, gt)
        problem = build_problem(dataset, start.layout, start.base_cameras, NearestNeighborIndex(dataset.surface.points), JointType.REVOLUTE)
        before = forward_loss(start.params, problem)
        done = optimize(start, problem, cfg)
        assert len(done.loss_history) == 60
        assert done.final_loss.total < 0.5 * before.total
        assert done.params.states[0] == 0.0
        assert np.all(done.params.camera[0] == 0.0)

    def test_initial_state_pins_first_frame(self, door):
        dataset, gt = door
        start = self._start(dataset, gt)
        assert start.params.states[0] == 0.0
        assert np.all(start.params.camera == 0.0)

    def test_non_finite_loss_names_iteration(self, door):
        dataset, gt = door
        start = self._start(dataset, gt)
        start.params.axis[:] = 0.0
        problem = build_problem(dataset, start.layout, start.base_cameras, NearestNeighborIndex(dataset.surface.points), JointType.REVOLUTE)
        with pytest.raises(NonFiniteLoss) as info:
            optimize(start, problem, _refine_settings(), iterations=3)
        assert info.value.iteration == 0

    def test_ground_truth_start_stays_put(self, door):
        dataset, gt = door
        layout = pixel_layout(dataset)
        start = RefineState(
            JointType.REVOLUTE, _gt_params(dataset, gt, _gt_logits(layout, gt.moving_maps)), list(gt.cameras), layout,
        )
        problem = build_problem(dataset, layout, gt.cameras, NearestNeighborIndex(gt.canonical_points), JointType.REVOLUTE)
        before = forward_loss(start.params, problem)
        done = optimize(start, problem, _refine_settings(ADAM_ITERATIONS=100))
        assert done.final_loss.total <= before.total + 1e-8
        assert axis_angle(done.params.axis, gt.joint.axis) < 1e-3

    def test_tilted_axis_converges_back(self, door):
        dataset, gt = door
        layout, vector = initial_units(dataset, UnitMode.SEGMENTS, dataset.moving_maps, (0.02, 0.98), 0.5)
        tilt = Rotation.from_rotvec(0.2 * np.array([1.0, 0.0, 0.0])).apply(gt.joint.axis)
        tilted = JointModel.create(JointType.REVOLUTE, tilt, gt.joint.pivot)
        assert axis_angle(tilted.axis, gt.joint.axis) == pytest.approx(0.2)
        start = initial_state(JointType.REVOLUTE, gt.cameras, tilted, gt.states.states, vector, layout)
        problem = build_problem(dataset, layout, start.base_cameras, NearestNeighborIndex(dataset.surface.points), JointType.REVOLUTE)
        done = optimize(start, problem, _refine_settings(ADAM_ITERATIONS=400, SUBSAMPLE_FRACTION=1.0))
        joint = done.joint
        assert axis_angle(joint.axis, gt.joint.axis) < 0.01
        assert line_line_distance(joint.axis, joint.pivot, gt.joint.axis, gt.joint.pivot) < 0.01


def _selection_state(hypothesis: JointType, axis, pivot, loss: float) -> RefineState:
    params = RefineParams(
        camera=np.zeros((2, 6)),
        axis=np.asarray(axis, dtype=np.float64),
        pivot=np.asarray(pivot, dtype=np.float64),
        states=np.zeros(2),
        logits=np.zeros(1),
    )
    layout = UnitLayout(UnitMode.PIXELS, np.zeros((2, 1), dtype=np.int64), 1, 1, 1)
    return RefineState(hypothesis, params, [RigidTransform.identity()] * 2, layout, final_loss=LossRecord(0, loss, 0.0))


class TestSelectJointType:
    surface = np.random.default_rng(0).uniform(-0.1, 0.1, (500, 3))

    def test_lower_loss_wins_near_surface(self):
        rev = _selection_state(JointType.REVOLUTE, [0, 0, 1], [0, 0, 0], 0.02)
        pri = _selection_state(JointType.PRISMATIC, [1, 0, 0], [0, 0, 0], 0.01)
        chosen = select_joint_type(rev, pri, self.surface, Settings())
        assert chosen.joint_type is JointType.PRISMATIC
        assert chosen.axis_surface_distance < 0.1

        rev = _selection_state(JointType.REVOLUTE, [0, 0, 1], [0, 0, 0], 0.005)
        assert select_joint_type(rev, pri, self.surface, Settings()).joint_type is JointType.REVOLUTE

    def test_distant_axis_forces_prismatic(self):
        rev = _selection_state(JointType.REVOLUTE, [0, 0, 1], [1.0, 0, 0], 0.001)
        pri = _selection_state(JointType.PRISMATIC, [1, 0, 0], [0, 0, 0], 0.5)
        chosen = select_joint_type(rev, pri, self.surface, Settings())
        assert chosen.joint_type is JointType.PRISMATIC
        assert chosen.axis_surface_distance > 0.8

    def test_missing_hypothesis_falls_back(self):
        rev = _selection_state(JointType.REVOLUTE, [0, 0, 1], [1.0, 0, 0], 0.001)
        assert select_joint_type(rev, None, self.surface).joint_type is JointType.REVOLUTE
        with pytest.raises(ValueError):
            select_joint_type(None, None, self.surface)


@pytest.fixture(scope="module")
def door_refined(door):
    dataset, _ = door
    cfg = _refine_settings()
    return run_refine(dataset, run_coarse(dataset, cfg, seed=0), cfg, seed=0)


@pytest.fixture(scope="module")
def drawer_refined(drawer):
    dataset, _ = drawer
    cfg = _refine_settings()
    return run_refine(dataset, run_coarse(dataset, cfg, seed=0), cfg, seed=0)


class TestRunRefine:
    def test_door_is_revolute(self, door, door_refined):
        _, gt = door
        assert door_refined.selection.joint_type is JointType.REVOLUTE
        assert axis_angle(door_refined.selection.joint.axis, gt.joint.axis) < 0.1

    def test_drawer_is_prismatic(self, drawer, drawer_refined):
        _, gt = drawer
        assert drawer_refined.selection.joint_type is JointType.PRISMATIC
        assert axis_angle(drawer_refined.selection.joint.axis, gt.joint.axis) < 0.1

    def test_report_covers_both_hypotheses(self, door, door_refined):
        dataset, _ = door
        report = door_refined.report
        assert report.frame_ids == dataset.frame_ids
        assert {h.hypothesis for h in report.hypotheses} == {JointType.REVOLUTE, JointType.PRISMATIC}
        assert report.selected is door_refined.selection.joint_type
        assert all(h.iterations == 40 for h in report.hypotheses)

    def test_moving_maps_rebuild_from_report(self, door, door_refined):
        dataset, _ = door
        maps = door_refined.selection.moving_maps()
        assert maps.shape == dataset.moving_maps.shape
        assert maps.min() >= 0.0 and maps.max() <= 1.0
        stored = door_refined.report.result_for(door_refined.selection.joint_type)
        np.testing.assert_allclose(result_moving_maps(dataset, stored), maps, atol=1e-12)

    def test_first_frame_stays_pinned(self, door_refined):
        for state in door_refined.states.values():
            assert state.state_sequence.states[0] == 0.0
            np.testing.assert_allclose(state.cameras[0].as_matrix(), state.base_cameras[0].as_matrix(), atol=1e-12)

    def test_random_start_without_coarse_is_seeded(self, door):
        dataset, _ = door
        cfg = _refine_settings()
        a = run_refine(dataset, None, cfg, seed=5, iterations=5)
        b = run_refine(dataset, None, cfg, seed=5, iterations=5)
        for hypothesis, state in a.states.items():
            np.testing.assert_array_equal(state.params.axis, b.states[hypothesis].params.axis)
            np.testing.assert_array_equal(state.params.states, b.states[hypothesis].params.states)
            assert all(c.translation_error(RigidTransform.identity()) == 0.0 for c in state.base_cameras)

    def test_pixel_units(self, door):
        dataset, _ = door
        outcome = run_refine(dataset, run_coarse(dataset, _refine_settings()), _refine_settings(), mode=UnitMode.PIXELS, iterations=5)
        assert outcome.layout.mode is UnitMode.PIXELS
        assert outcome.report.newly_observed == []

    @pytest.mark.parametrize("refined", ["door_refined", "drawer_refined"])
    def test_segment_probabilities_separate_the_parts(self, request, refined, door, drawer):
        outcome = request.getfixturevalue(refined)
        dataset, gt = door if refined == "door_refined" else drawer
        state = outcome.states[outcome.selection.joint_type]
        vector = state.moving_vector
        moving_pixels = gt.moving_maps >= 0.5
        for segment, probability in zip(vector.unit_ids, vector.probabilities):
            pixels = dataset.segment_labels == segment
            if moving_pixels[pixels].mean() > 0.5:
                assert probability > 0.7, f"segment {segment}"
            else:
                assert probability < 0.3, f"segment {segment}"
