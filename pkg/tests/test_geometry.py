import math

import numpy as np
import pytest

from gridfuse.geometry import (REF_LABELS, FovSector, OrientedBox,
                               angle_difference, fold_heading_deviation,
                               point_line_distance, point_segment_distance,
                               polygon_area, polygon_boundary_distance,
                               polygon_contains, polygon_is_simple,
                               wrap_angle)

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


class TestWrapAngle:
    def test_fixed_points(self):
        assert wrap_angle(0.0) == 0.0
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)
        assert wrap_angle(-1.5 * math.pi) == pytest.approx(0.5 * math.pi)

    def test_range_and_equivalence(self, rng):
        # wrapped value stays in (-pi, pi] and represents the same angle
        for _ in range(50):
            x = rng.uniform(-40.0, 40.0, size=100)
            w = wrap_angle(x)
            assert np.all(w > -math.pi) and np.all(w <= math.pi)
            assert np.allclose(np.exp(1j * w), np.exp(1j * x), atol=1e-9)

    def test_array_and_scalar_agree(self, rng):
        x = rng.uniform(-20, 20, size=64)
        w = wrap_angle(x)
        for i in range(x.size):
            assert w[i] == wrap_angle(float(x[i]))

    def test_angle_difference(self):
        assert angle_difference(0.1, -0.1) == pytest.approx(0.2)
        assert angle_difference(math.pi - 0.05, -math.pi + 0.05) == \
            pytest.approx(-0.1)


class TestFoldHeadingDeviation:
    def test_direction_free(self):
        # a heading and its reverse count as aligned
        assert fold_heading_deviation(0.0) == 0.0
        assert fold_heading_deviation(math.pi) == pytest.approx(0.0)
        assert fold_heading_deviation(-math.pi) == pytest.approx(0.0)
        assert fold_heading_deviation(0.3) == pytest.approx(0.3)
        assert fold_heading_deviation(math.pi - 0.3) == pytest.approx(0.3)
        assert fold_heading_deviation(-0.3) == pytest.approx(0.3)
        assert fold_heading_deviation(math.pi / 2) == pytest.approx(math.pi / 2)

    def test_range(self, rng):
        for x in rng.uniform(-10, 10, size=500):
            f = fold_heading_deviation(float(x))
            assert 0.0 <= f <= math.pi / 2 + 1e-12


class TestOrientedBox:
    def test_axis_aligned_corners(self):
        box = OrientedBox(np.array([1.0, 2.0]), 0.0, 4.0, 2.0)
        expect = np.array([[-1.0, 3.0], [3.0, 3.0], [3.0, 1.0], [-1.0, 1.0]])
        assert np.allclose(box.corners(), expect)

    def test_anchor_round_trip(self, rng):
        for _ in range(30):
            center = rng.uniform(-10, 10, size=2)
            heading = rng.uniform(-math.pi, math.pi)
            box = OrientedBox(center, heading, rng.uniform(1, 6),
                              rng.uniform(0.5, 3))
            for label in REF_LABELS:
                rebuilt = OrientedBox.from_anchor(
                    label, box.anchor(label), box.heading, box.length,
                    box.width)
                assert np.allclose(rebuilt.center, box.center, atol=1e-9)

    def test_from_corners_round_trip(self, rng):
        for _ in range(30):
            box = OrientedBox(rng.uniform(-5, 5, 2),
                              rng.uniform(-math.pi, math.pi),
                              rng.uniform(0.5, 8), rng.uniform(0.3, 4))
            back = OrientedBox.from_corners(box.corners())
            assert np.allclose(back.center, box.center, atol=1e-9)
            assert back.length == pytest.approx(box.length)
            assert back.width == pytest.approx(box.width)
            assert angle_difference(back.heading, box.heading) == \
                pytest.approx(0.0, abs=1e-9)

    def test_from_corners_rejects_non_rectangle(self):
        bad = np.array([[0, 0], [2, 0], [2.5, 1.4], [0, 1]], dtype=float)
        with pytest.raises(ValueError):
            OrientedBox.from_corners(bad)

    def test_contains_boundary_inclusive(self):
        box = OrientedBox(np.zeros(2), 0.0, 4.0, 2.0)
        assert box.contains(np.array([2.0, 1.0]))
        assert box.contains(np.array([2.0, 0.0]))
        assert not box.contains(np.array([2.0001, 0.0]))
        assert box.contains(np.array([2.0001, 0.0]), slack=0.001)

    def test_distance_and_lateral_offset(self):
        box = OrientedBox(np.zeros(2), 0.0, 4.0, 2.0)
        assert box.distance(np.array([0.5, 0.2])) == 0.0
        assert box.distance(np.array([5.0, 0.0])) == pytest.approx(3.0)
        assert box.distance(np.array([0.0, 4.0])) == pytest.approx(3.0)
        assert box.lateral_offset(np.array([1.0, 0.7])) == pytest.approx(0.7)
        assert box.lateral_offset(np.array([1.0, -0.7])) == pytest.approx(-0.7)

    def test_lateral_offset_rotated(self):
        box = OrientedBox(np.zeros(2), math.pi / 2, 4.0, 2.0)
        # box points along +y; +x side is to its right -> negative offset
        assert box.lateral_offset(np.array([0.5, 0.0])) == pytest.approx(-0.5)

    def test_nearest_anchor_tie_breaks_to_earliest_label(self):
        box = OrientedBox(np.zeros(2), 0.0, 4.0, 2.0)
        # center is equidistant from all eight anchors? No: sides differ.
        # Query from far behind on the axis: bl and br tie behind b.
        label, _ = box.nearest_anchor(np.array([-10.0, 0.0]))
        assert label == "b"
        # equidistant from bl and br, both at distance sqrt(...):
        label, _ = box.nearest_anchor(np.array([-5.0, 0.0]))
        assert label == "b"
        # directly left at the box edge: 'l' wins
        label, _ = box.nearest_anchor(np.array([0.0, 5.0]))
        assert label == "l"

    def test_nearest_anchor_is_closest(self, rng):
        for _ in range(50):
            box = OrientedBox(rng.uniform(-3, 3, 2),
                              rng.uniform(-math.pi, math.pi),
                              rng.uniform(1, 5), rng.uniform(0.5, 2.5))
            p = rng.uniform(-8, 8, 2)
            label, pos = box.nearest_anchor(p)
            dists = {k: float(np.hypot(*(v - p)))
                     for k, v in box.anchors().items()}
            assert dists[label] == pytest.approx(min(dists.values()))

    def test_degenerate_extent_rejected(self):
        with pytest.raises(ValueError):
            OrientedBox(np.zeros(2), 0.0, -1.0, 1.0)


class TestSegments:
    def test_point_segment_distance(self):
        a, b = np.zeros(2), np.array([2.0, 0.0])
        assert point_segment_distance(np.array([1.0, 1.0]), a, b) == \
            pytest.approx(1.0)
        assert point_segment_distance(np.array([-1.0, 0.0]), a, b) == \
            pytest.approx(1.0)
        assert point_segment_distance(np.array([3.0, 4.0]), a, b) == \
            pytest.approx(math.hypot(1.0, 4.0))

    def test_degenerate_segment(self):
        a = np.array([1.0, 1.0])
        assert point_segment_distance(np.array([4.0, 5.0]), a, a) == \
            pytest.approx(5.0)
        assert point_line_distance(np.array([4.0, 5.0]), a, a) == \
            pytest.approx(5.0)

    def test_point_line_vs_segment(self):
        a, b = np.zeros(2), np.array([1.0, 0.0])
        p = np.array([5.0, 2.0])
        assert point_line_distance(p, a, b) == pytest.approx(2.0)
        assert point_segment_distance(p, a, b) > 2.0


class TestPolygons:
    def test_area(self):
        assert polygon_area(UNIT_SQUARE) == pytest.approx(1.0)
        tri = np.array([[0, 0], [2, 0], [0, 2]], dtype=float)
        assert polygon_area(tri) == pytest.approx(2.0)

    def test_simple_vs_self_intersecting(self):
        assert polygon_is_simple(UNIT_SQUARE)
        bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
        assert not polygon_is_simple(bowtie)

    def test_contains(self):
        assert polygon_contains(np.array([0.5, 0.5]), UNIT_SQUARE)
        assert not polygon_contains(np.array([1.5, 0.5]), UNIT_SQUARE)
        # boundary is inside
        assert polygon_contains(np.array([1.0, 0.5]), UNIT_SQUARE)
        assert polygon_contains(np.array([0.0, 0.0]), UNIT_SQUARE)

    def test_contains_ray_through_vertex(self):
        diamond = np.array([[1, 0], [2, 1], [1, 2], [0, 1]], dtype=float)
        assert polygon_contains(np.array([1.0, 1.0]), diamond)
        assert not polygon_contains(np.array([2.5, 1.0]), diamond)
        assert not polygon_contains(np.array([-0.5, 1.0]), diamond)

    def test_boundary_distance(self):
        assert polygon_boundary_distance(np.array([0.5, 0.5]), UNIT_SQUARE) \
            == pytest.approx(0.5)
        assert polygon_boundary_distance(np.array([2.0, 0.5]), UNIT_SQUARE) \
            == pytest.approx(1.0)


class TestFovSector:
    def test_range_limit(self):
        fov = FovSector(-math.pi / 4, math.pi / 4, 10.0)
        assert fov.contains(np.array([5.0, 0.0]))
        assert not fov.contains(np.array([11.0, 0.0]))

    def test_angle_limits(self):
        fov = FovSector(-math.pi / 4, math.pi / 4, 10.0)
        assert fov.contains(np.array([1.0, 0.99]))
        assert not fov.contains(np.array([0.0, 2.0]))
        assert not fov.contains(np.array([-2.0, 0.0]))

    def test_wraparound_sector(self):
        # sector spanning the +/-pi seam
        fov = FovSector(math.radians(170), math.radians(-170), 10.0)
        assert fov.contains(np.array([-5.0, 0.0]))
        assert not fov.contains(np.array([5.0, 0.0]))

    def test_full_circle(self):
        fov = FovSector(-math.pi, math.pi, 10.0)
        for ang in np.linspace(-math.pi, math.pi, 17):
            assert fov.contains(5.0 * np.array([math.cos(ang), math.sin(ang)]))
