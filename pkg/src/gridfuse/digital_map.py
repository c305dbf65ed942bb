"""Digital map: building polygons, lane centerlines, and the rectangle
decomposition of lanes used for map-consistency checks.

Maps are loaded in a global planar frame and transformed into the
ego-stationary frame through a FrameAnchor. Lane rectangles are always
derived from the centerlines at load time; they are never read from disk.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ego import FrameAnchor
from .geometry import (OrientedBox, fold_heading_deviation, point_line_distance,
                       polygon_boundary_distance, polygon_contains,
                       polygon_is_simple, wrap_angle)

GLOBAL_FRAME = "global"
EGO_FRAME = "ego"


class MapError(ValueError):
    """Raised for structurally invalid map content."""


@dataclass(frozen=True)
class MapBuildConfig:
    """Parameters for deriving lane rectangles and map queries."""

    max_deviation: float = 0.3    # polyline fit tolerance, meters
    default_width: float = 3.5    # lane width when the map carries none
    assoc_gate: float = 10.0      # rectangle association gate, meters
    inset_margin: float = 0.5     # "clearly inside a building" margin, meters

    def validate(self):
        for name in ("max_deviation", "default_width", "assoc_gate",
                     "inset_margin"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class Building:
    """Closed polygon footprint. corners has shape (N, 2), N >= 3."""

    id: int
    corners: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "corners",
                           np.asarray(self.corners, dtype=float))
        if self.corners.ndim != 2 or self.corners.shape[1] != 2:
            raise MapError(f"building {self.id}: corners must be (N, 2)")
        if len(self.corners) < 3:
            raise MapError(f"building {self.id}: needs at least 3 corners")
        if not polygon_is_simple(self.corners):
            raise MapError(f"building {self.id}: polygon self-intersects")


@dataclass(frozen=True)
class Lane:
    """Centerline polyline with roughly equidistant points."""

    id: int
    points: np.ndarray
    width: float = 0.0  # 0 means unspecified, fall back to the config default

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise MapError(f"lane {self.id}: points must be (N, 2)")
        if len(self.points) < 2:
            raise MapError(f"lane {self.id}: needs at least 2 points")
        seg = np.diff(self.points, axis=0)
        lengths = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(lengths <= 0.0):
            raise MapError(f"lane {self.id}: repeated consecutive points")
        if len(lengths) >= 2:
            med = float(np.median(lengths))
            if lengths.max() > 1.2 * med or lengths.min() < 0.8 * med:
                raise MapError(
                    f"lane {self.id}: point spacing varies more than 20% "
                    f"around the median ({med:.3f} m)")


@dataclass(frozen=True)
class LaneRectangle:
    """One straight piece of a lane, as an oriented box."""

    id: int
    lane_id: int
    center: np.ndarray
    heading: float
    length: float
    width: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "heading", float(wrap_angle(self.heading)))

    def box(self) -> OrientedBox:
        return OrientedBox(self.center, self.heading, self.length, self.width)


@dataclass
class DigitalMap:
    buildings: list = field(default_factory=list)
    lanes: list = field(default_factory=list)
    rectangles: list = field(default_factory=list)
    frame: str = GLOBAL_FRAME

    def __post_init__(self):
        if self.frame not in (GLOBAL_FRAME, EGO_FRAME):
            raise MapError(f"unknown frame {self.frame!r}")
        lane_ids = {lane.id for lane in self.lanes}
        for rect in self.rectangles:
            if rect.lane_id not in lane_ids:
                raise MapError(
                    f"rectangle {rect.id} references missing lane {rect.lane_id}")


# ---- polyline simplification ------------------------------------------------


def _endpoint_fit(points: np.ndarray, max_deviation: float) -> list[int]:
    """Indices of the simplified polyline (iterative end-point fit).

    Keeps the endpoints and recursively splits at the point farthest from
    the chord while that distance exceeds max_deviation.
    """
    keep = [0, len(points) - 1]
    stack = [(0, len(points) - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        a, b = points[lo], points[hi]
        dists = [point_line_distance(points[i], a, b) for i in range(lo + 1, hi)]
        k = int(np.argmax(dists))
        if dists[k] > max_deviation:
            split = lo + 1 + k
            keep.append(split)
            stack.append((lo, split))
            stack.append((split, hi))
    return sorted(set(keep))


def approximate_lane(lane: Lane, cfg: MapBuildConfig = MapBuildConfig(),
                     start_id: int = 0) -> list[LaneRectangle]:
    """Decompose a lane centerline into oriented rectangles.

    Every original point stays within cfg.max_deviation of the simplified
    polyline; each simplified segment becomes one rectangle of the lane's
    width (or the default) centered on the segment.
    """
    cfg.validate()
    keep = _endpoint_fit(lane.points, cfg.max_deviation)
    width = lane.width if lane.width > 0.0 else cfg.default_width
    rects = []
    for j in range(len(keep) - 1):
        a = lane.points[keep[j]]
        b = lane.points[keep[j + 1]]
        seg = b - a
        length = float(np.hypot(seg[0], seg[1]))
        rects.append(LaneRectangle(
            id=start_id + j,
            lane_id=lane.id,
            center=0.5 * (a + b),
            heading=math.atan2(seg[1], seg[0]),
            length=length,
            width=width,
        ))
    return rects


def build_rectangles(lanes, cfg: MapBuildConfig = MapBuildConfig()) -> list:
    """Derive rectangles for all lanes with globally unique ids."""
    rects = []
    for lane in sorted(lanes, key=lambda ln: ln.id):
        rects.extend(approximate_lane(lane, cfg, start_id=len(rects)))
    return rects


# ---- queries ----------------------------------------------------------------


def point_in_building(point, dmap: DigitalMap, margin: float = 0.0):
    """The building containing the point, or None.

    With margin > 0 the point must additionally be at least margin away
    from every edge of that building ("clearly inside"). Boundary points
    count as inside at margin 0. Lowest building id wins if footprints
    overlap.
    """
    for b in sorted(dmap.buildings, key=lambda bb: bb.id):
        if polygon_contains(point, b.corners):
            if margin <= 0.0 or polygon_boundary_distance(point, b.corners) >= margin:
                return b
    return None


@dataclass(frozen=True)
class RectangleMatch:
    rect: LaneRectangle
    distance: float           # oriented-box distance, 0 when inside
    lateral_offset: float     # perpendicular offset from the lane axis
    heading_deviation: float  # folded into [0, pi/2]


def associate_rectangle(point, heading: float, dmap: DigitalMap,
                        gate: float = 10.0):
    """Nearest lane rectangle within the gate, or None.

    Distance is the oriented-box distance (0 inside the rectangle); ties
    resolve to the lower rectangle id. The heading deviation folds out the
    driving direction, so traffic on the same axis is never penalized for
    its sense of travel.
    """
    best = None
    for rect in dmap.rectangles:
        d = rect.box().distance(point)
        if d > gate:
            continue
        key = (d, rect.id)
        if best is None or key < best[0]:
            best = (key, rect)
    if best is None:
        return None
    rect = best[1]
    return RectangleMatch(
        rect=rect,
        distance=best[0][0],
        lateral_offset=abs(rect.box().lateral_offset(point)),
        heading_deviation=fold_heading_deviation(heading - rect.heading),
    )


# ---- frame changes ----------------------------------------------------------


def map_to_ego(dmap: DigitalMap, anchor: FrameAnchor) -> DigitalMap:
    """Transform a global-frame map into the ego-stationary frame."""
    if dmap.frame != GLOBAL_FRAME:
        raise MapError(f"expected a global-frame map, got {dmap.frame!r}")
    return _transform(dmap, anchor.global_to_ego_points,
                      anchor.global_to_ego_heading, EGO_FRAME)


def map_to_global(dmap: DigitalMap, anchor: FrameAnchor) -> DigitalMap:
    """Transform an ego-stationary map back into the global frame."""
    if dmap.frame != EGO_FRAME:
        raise MapError(f"expected an ego-frame map, got {dmap.frame!r}")
    return _transform(dmap, anchor.ego_to_global_points,
                      anchor.ego_to_global_heading, GLOBAL_FRAME)


def _transform(dmap, point_fn, heading_fn, target_frame) -> DigitalMap:
    buildings = [Building(b.id, point_fn(b.corners)) for b in dmap.buildings]
    lanes = [Lane(ln.id, point_fn(ln.points), ln.width) for ln in dmap.lanes]
    rects = [LaneRectangle(r.id, r.lane_id, point_fn(r.center),
                           heading_fn(r.heading), r.length, r.width)
             for r in dmap.rectangles]
    return DigitalMap(buildings=buildings, lanes=lanes, rectangles=rects,
                      frame=target_frame)


# ---- serialization ----------------------------------------------------------


def map_from_dict(data: dict, cfg: MapBuildConfig = MapBuildConfig(),
                  frame: str = GLOBAL_FRAME) -> DigitalMap:
    """Build a map from the JSON schema
    {"buildings": [{"id", "corners"}], "lanes": [{"id", "points", "width"?}]}.

    Rectangles are derived here; any rectangle data in the input is ignored.
    """
    try:
        buildings = [Building(int(b["id"]), b["corners"])
                     for b in data.get("buildings", [])]
        lanes = [Lane(int(ln["id"]), ln["points"], float(ln.get("width", 0.0)))
                 for ln in data.get("lanes", [])]
    except (KeyError, TypeError) as exc:
        raise MapError(f"malformed map data: {exc}") from exc
    for group, name in ((buildings, "building"), (lanes, "lane")):
        ids = [item.id for item in group]
        if len(ids) != len(set(ids)):
            raise MapError(f"duplicate {name} ids")
    rects = build_rectangles(lanes, cfg)
    return DigitalMap(buildings=buildings, lanes=lanes, rectangles=rects,
                      frame=frame)


def map_to_dict(dmap: DigitalMap) -> dict:
    return {
        "buildings": [{"id": b.id, "corners": b.corners.tolist()}
                      for b in dmap.buildings],
        "lanes": [{"id": ln.id, "points": ln.points.tolist(),
                   **({"width": ln.width} if ln.width > 0.0 else {})}
                  for ln in dmap.lanes],
    }


def load_map(path, cfg: MapBuildConfig = MapBuildConfig()) -> DigitalMap:
    """Load a global-frame map from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MapError(f"map file {path} is not valid JSON: {exc}") from exc
    return map_from_dict(data, cfg)


def save_map(dmap: DigitalMap, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(map_to_dict(dmap), fh, indent=2, sort_keys=True)
        fh.write("\n")
