"""Tests for newly observed segments and the movable / static split of P^O."""
import numpy as np
import pytest

from artictwin.config import Settings
from artictwin.services.evaluation import partition_iou
from artictwin.services.geometry import RigidTransform
from artictwin.services.observations import FrameObservation, SegmentTrack
from artictwin.services.segment import (
    MOVABLE_LABEL,
    SurfacePartition,
    classify_newly_observed,
    extract_movable_part,
)


def _frame(points, valid=None) -> FrameObservation:
    points = np.asarray(points, dtype=np.float64).reshape(1, -1, 3)
    valid = np.ones(points.shape[:2], dtype=bool) if valid is None else np.asarray(valid).reshape(1, -1)
    return FrameObservation(0, points, valid)


class TestNewlyObserved:
    def test_absent_from_first_frame(self):
        seen = np.zeros((3, 2, 2), dtype=bool)
        seen[0, 0, 0] = True
        late = np.zeros((3, 2, 2), dtype=bool)
        late[2, 1, 1] = True
        assert classify_newly_observed([SegmentTrack(4, seen), SegmentTrack(9, late)]) == {9}

    def test_no_tracks(self):
        with pytest.raises(ValueError):
            classify_newly_observed([])


class TestSurfacePartition:
    def test_labels_round_trip(self):
        labels = np.array([0, 1, 1, 0, 1])
        part = SurfacePartition.from_labels(labels)
        np.testing.assert_array_equal(part.movable, [1, 2, 4])
        np.testing.assert_array_equal(part.static, [0, 3])
        np.testing.assert_array_equal(part.labels(), labels)
        assert part.size == 5


class TestExtractMovablePart:
    surface = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.02, 0.0, 0.0]])

    def test_radius_around_moving_pixels(self):
        frame = _frame([[1.0, 0.0, 0.0], [5.0, 5.0, 5.0]])
        part = extract_movable_part(self.surface, np.array([[1.0, 0.0]]), frame, Settings())
        np.testing.assert_array_equal(part.movable, [1, 2])
        np.testing.assert_array_equal(part.static, [0])
        assert not part.no_moving_pixels

    def test_camera_moves_the_anchors(self):
        frame = _frame([[1.0, 0.0, 0.0], [5.0, 5.0, 5.0]])
        camera0 = RigidTransform.from_translation([-1.0, 0.0, 0.0])
        part = extract_movable_part(self.surface, np.array([[1.0, 0.0]]), frame, Settings(), camera0)
        np.testing.assert_array_equal(part.movable, [0])

    def test_threshold_is_strict(self):
        frame = _frame([[1.0, 0.0, 0.0], [5.0, 5.0, 5.0]])
        part = extract_movable_part(self.surface, np.array([[0.7, 0.0]]), frame, Settings(MOVING_THRESHOLD=0.7))
        assert part.no_moving_pixels

    def test_invalid_pixels_are_ignored(self):
        frame = _frame([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]], valid=[False, True])
        part = extract_movable_part(self.surface, np.array([[1.0, 0.0]]), frame, Settings())
        assert part.no_moving_pixels

    def test_no_moving_pixels(self):
        frame = _frame([[1.0, 0.0, 0.0], [5.0, 5.0, 5.0]])
        part = extract_movable_part(self.surface, np.zeros((1, 2)), frame, Settings())
        assert part.no_moving_pixels
        assert len(part.movable) == 0
        np.testing.assert_array_equal(part.static, [0, 1, 2])

    def test_map_shape_must_match(self):
        frame = _frame([[1.0, 0.0, 0.0], [5.0, 5.0, 5.0]])
        with pytest.raises(ValueError):
            extract_movable_part(self.surface, np.zeros((2, 1)), frame, Settings())

    def test_door_from_ground_truth_maps(self, door):
        dataset, gt = door
        part = extract_movable_part(dataset.surface, gt.moving_maps[0], dataset.frames[0], Settings())
        movable = part.labels() == MOVABLE_LABEL
        recall = np.count_nonzero(movable & gt.surface_movable) / np.count_nonzero(gt.surface_movable)
        assert recall > 0.95
        assert partition_iou(movable, gt.surface_movable) > 0.7
