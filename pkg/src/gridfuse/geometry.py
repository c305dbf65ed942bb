"""Planar geometry primitives shared across the pipeline.

Conventions used throughout the package:

* frames are right-handed, x forward and y to the left when the frame is
  anchored to the vehicle;
* headings and orientations are radians in (-pi, pi];
* oriented boxes are rectangles given by center, heading, length (along the
  heading axis) and width (across it), with corners ordered
  [back-left, front-left, front-right, back-right].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Anchor labels of an oriented box: four edge midpoints and four corners,
# named from the box's own point of view (b = middle of the back edge,
# fl = front-left corner, ...). Order is fixed; ties in nearest-anchor
# searches resolve to the earliest label.
REF_LABELS = ("b", "bl", "l", "fl", "f", "fr", "r", "br")


def wrap_angle(angle):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    return math.pi - (math.pi - angle) % TWO_PI


def angle_difference(a, b):
    """Signed difference a - b wrapped into (-pi, pi]."""
    return wrap_angle(a - b)


def fold_heading_deviation(delta: float) -> float:
    """Fold a heading difference into [0, pi/2].

    Treats headings that differ by pi as equal, so driving direction along
    an axis does not matter (two-way roads share one geometric axis).
    """
    d = abs(wrap_angle(delta))
    return min(d, math.pi - d)


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.hypot(v[0], v[1]))
    if n <= 0.0:
        raise ValueError("zero-length vector has no direction")
    return v / n


@dataclass(frozen=True)
class OrientedBox:
    """Rectangle with a heading. center is a length-2 array."""

    center: np.ndarray
    heading: float
    length: float
    width: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.center.shape != (2,):
            raise ValueError("center must be a 2-vector")
        if self.length < 0.0 or self.width < 0.0:
            raise ValueError("box extents must be nonnegative")
        object.__setattr__(self, "heading", float(wrap_angle(self.heading)))

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit vectors along the heading (u) and to the left of it (n)."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        return np.array([c, s]), np.array([-s, c])

    def corners(self) -> np.ndarray:
        """Corners in order [bl, fl, fr, br], shape (4, 2)."""
        u, n = self.axes()
        hl, hw = 0.5 * self.length, 0.5 * self.width
        c = self.center
        return np.array(
            [c - hl * u + hw * n, c + hl * u + hw * n,
             c + hl * u - hw * n, c - hl * u - hw * n]
        )

    def anchors(self) -> dict[str, np.ndarray]:
        """The eight reference points keyed by REF_LABELS."""
        u, n = self.axes()
        hl, hw = 0.5 * self.length, 0.5 * self.width
        c = self.center
        return {
            "b": c - hl * u,
            "bl": c - hl * u + hw * n,
            "l": c + hw * n,
            "fl": c + hl * u + hw * n,
            "f": c + hl * u,
            "fr": c + hl * u - hw * n,
            "r": c - hw * n,
            "br": c - hl * u - hw * n,
        }

    def anchor(self, label: str) -> np.ndarray:
        try:
            return self.anchors()[label]
        except KeyError:
            raise ValueError(f"unknown anchor label {label!r}") from None

    def nearest_anchor(self, point) -> tuple[str, np.ndarray]:
        """Anchor closest to point; ties resolve to the earliest REF_LABELS entry."""
        p = np.asarray(point, dtype=float)
        anchors = self.anchors()
        best_label = None
        best_d = math.inf
        for label in REF_LABELS:
            d = float(np.hypot(*(anchors[label] - p)))
            if d < best_d:
                best_d = d
                best_label = label
        return best_label, anchors[best_label]

    def local_offsets(self, points) -> np.ndarray:
        """Longitudinal/lateral offsets of points from the center, shape (..., 2)."""
        u, n = self.axes()
        d = np.asarray(points, dtype=float) - self.center
        return np.stack([d @ u, d @ n], axis=-1)

    def contains(self, points, slack: float = 0.0):
        """Whether points fall inside the box (boundary inclusive, plus slack)."""
        off = self.local_offsets(points)
        hit = (np.abs(off[..., 0]) <= 0.5 * self.length + slack) & (
            np.abs(off[..., 1]) <= 0.5 * self.width + slack
        )
        return bool(hit) if hit.ndim == 0 else hit

    def distance(self, point) -> float:
        """Euclidean distance from point to the box (0 inside)."""
        off = self.local_offsets(point)
        dx = max(0.0, abs(float(off[0])) - 0.5 * self.length)
        dy = max(0.0, abs(float(off[1])) - 0.5 * self.width)
        return math.hypot(dx, dy)

    def lateral_offset(self, point) -> float:
        """Perpendicular offset of point from the box's long axis."""
        return float(self.local_offsets(point)[1])

    @staticmethod
    def from_anchor(label: str, anchor_pos, heading: float,
                    length: float, width: float) -> "OrientedBox":
        """Build a box with the given anchor placed at anchor_pos."""
        probe = OrientedBox(np.zeros(2), heading, length, width)
        offset = probe.anchor(label)  # anchor position relative to the center
        return OrientedBox(np.asarray(anchor_pos, dtype=float) - offset,
                           heading, length, width)

    @staticmethod
    def from_corners(corners, atol: float = 1e-6) -> "OrientedBox":
        """Recover a box from corners ordered [bl, fl, fr, br]."""
        c = np.asarray(corners, dtype=float)
        if c.shape != (4, 2):
            raise ValueError("corners must have shape (4, 2)")
        e_long = c[1] - c[0]
        e_lat = c[2] - c[1]
        length = float(np.hypot(*e_long))
        width = float(np.hypot(*e_lat))
        if length > atol and width > atol:
            cosang = float(np.dot(e_long, e_lat)) / (length * width)
            if abs(cosang) > 1e-6:
                raise ValueError("corners do not form a rectangle")
        heading = math.atan2(e_long[1], e_long[0]) if length > atol else math.atan2(
            e_lat[0], -e_lat[1]
        )
        return OrientedBox(c.mean(axis=0), heading, length, width)


def point_segment_distance(p, a, b) -> float:
    """Distance from point p to the segment [a, b]."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom <= 0.0:
        return float(np.hypot(*(p - a)))
    t = float((p - a) @ ab) / denom
    t = min(1.0, max(0.0, t))
    return float(np.hypot(*(p - (a + t * ab))))


def point_line_distance(p, a, b) -> float:
    """Distance from point p to the infinite line through a and b.

    Falls back to the point distance when a == b.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    norm = float(np.hypot(*ab))
    if norm <= 0.0:
        return float(np.hypot(*(p - a)))
    return abs(float(ab[0] * (p[1] - a[1]) - ab[1] * (p[0] - a[0]))) / norm


def _segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper or improper intersection of segments [p1,p2] and [q1,q2]."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if v > 1e-12:
            return 1
        if v < -1e-12:
            return -1
        return 0

    def on_segment(a, b, c):
        return (min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
                and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_segment(p1, p2, q1):
        return True
    if o2 == 0 and on_segment(p1, p2, q2):
        return True
    if o3 == 0 and on_segment(q1, q2, p1):
        return True
    if o4 == 0 and on_segment(q1, q2, p2):
        return True
    return False


def polygon_is_simple(corners) -> bool:
    """True when no two non-adjacent polygon edges intersect."""
    c = np.asarray(corners, dtype=float)
    n = len(c)
    if n < 3:
        return False
    edges = [(c[i], c[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # shared endpoint
            if _segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def polygon_area(corners) -> float:
    """Absolute area by the shoelace formula."""
    c = np.asarray(corners, dtype=float)
    x, y = c[:, 0], c[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polygon_boundary_distance(point, corners) -> float:
    """Distance from point to the closest polygon edge."""
    c = np.asarray(corners, dtype=float)
    n = len(c)
    return min(point_segment_distance(point, c[i], c[(i + 1) % n]) for i in range(n))


def polygon_contains(point, corners, boundary_eps: float = 1e-9) -> bool:
    """Even-odd (ray casting) containment test, boundary inclusive.

    Points within boundary_eps of an edge count as inside regardless of the
    ray parity, so exact edge and vertex hits are stable.
    """
    p = np.asarray(point, dtype=float)
    c = np.asarray(corners, dtype=float)
    if polygon_boundary_distance(p, c) <= boundary_eps:
        return True
    n = len(c)
    inside = False
    x, y = float(p[0]), float(p[1])
    for i in range(n):
        x1, y1 = c[i]
        x2, y2 = c[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


@dataclass(frozen=True)
class FovSector:
    """Angular sector with a range limit, the footprint of a sensing module.

    Angles are bearings in the frame the sector lives in; the sector spans
    counterclockwise from min_angle to max_angle. A span of 2*pi or more
    means omnidirectional.
    """

    min_angle: float
    max_angle: float
    max_range: float

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        r = float(np.hypot(p[0], p[1]))
        if r > self.max_range:
            return False
        span = (self.max_angle - self.min_angle) % TWO_PI
        if span == 0.0 and self.max_angle != self.min_angle:
            return True  # full circle expressed as min + 2*pi
        if self.max_angle - self.min_angle >= TWO_PI - 1e-12:
            return True
        bearing = math.atan2(p[1], p[0])
        return (bearing - self.min_angle) % TWO_PI <= span + 1e-12
