"""Scenario simulation: scripted ground truth rendered into occupancy grid
frames and track envelopes.

A scenario keeps the ego vehicle stationary at the grid center (the
ego-stationary frame coincides with the vehicle frame), scripts every other
object as piecewise constant-turn-rate-and-acceleration segments, and
renders two synchronized streams:

* grid frames: object and obstacle footprints rasterized into cell
  evidence, with per-cell velocity noise; static obstacles get a high
  velocity variance so they carry no usable motion evidence;
* track envelopes: noisy box-level samples with existence and covariance;
  during scripted occlusion windows an object vanishes from the grid while
  its track coasts with growing covariance and decaying existence.

Ground-truth objects can be marked as artifacts (is_real=False) and
restricted to one stream, which is how phantom tracks and grid ghosts are
injected. All randomness derives from the scenario seed, one independent
substream per rendered frame, so any frame can be re-rendered in isolation
and whole runs repeat bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .dogma import DogmaFrame, _FIELD_NAMES
from .ego import EgoState, FrameAnchor, GlobalEgoState, ctra_predict
from .fusion import SampleEnvelope, TrackState, TRACK_SOURCE
from .geometry import FovSector, OrientedBox


class ScenarioError(ValueError):
    """Raised for structurally invalid scenario definitions."""


@dataclass(frozen=True)
class TrajectorySegment:
    """Motion state an object assumes from t_start onward."""

    t_start: float
    x: float
    y: float
    v: float = 0.0
    a: float = 0.0
    heading: float = 0.0
    yaw_rate: float = 0.0

    def state_at(self, t: float) -> EgoState:
        start = EgoState(x=self.x, y=self.y, v=self.v, a=self.a,
                         heading=self.heading, yaw_rate=self.yaw_rate,
                         timestamp=self.t_start)
        return ctra_predict(start, max(0.0, t - self.t_start))

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k))
                for k in ("t_start", "x", "y", "v", "a", "heading", "yaw_rate")}

    @classmethod
    def from_dict(cls, d: dict) -> "TrajectorySegment":
        return cls(**{k: float(d.get(k, 0.0))
                      for k in ("t_start", "x", "y", "v", "a", "heading",
                                "yaw_rate")})


@dataclass
class GroundTruthObject:
    """One scripted object.

    is_real distinguishes genuine objects from injected artifacts;
    seen_by_grid / seen_by_tracker restrict which streams render it.
    occlusions are [start, end] windows during which the grid does not see
    the object and the tracker coasts.
    """

    id: int
    obj_class: str
    length: float
    width: float
    segments: list
    t_start: float = 0.0
    t_end: float = math.inf
    seen_by_grid: bool = True
    seen_by_tracker: bool = True
    is_real: bool = True
    track_label: int | None = None
    occlusions: list = field(default_factory=list)

    def __post_init__(self):
        if not self.segments:
            raise ScenarioError(f"object {self.id}: needs at least one segment")
        self.segments = sorted(self.segments, key=lambda s: s.t_start)

    def alive(self, t: float) -> bool:
        return self.t_start <= t <= self.t_end

    def occluded_at(self, t: float) -> bool:
        return any(lo <= t <= hi for lo, hi in self.occlusions)

    def occlusion_age(self, t: float) -> float:
        for lo, hi in self.occlusions:
            if lo <= t <= hi:
                return t - lo
        return 0.0

    def state_at(self, t: float) -> EgoState:
        governing = self.segments[0]
        for seg in self.segments:
            if seg.t_start <= t:
                governing = seg
            else:
                break
        return governing.state_at(t)

    def box_at(self, t: float) -> OrientedBox:
        s = self.state_at(t)
        return OrientedBox(np.array([s.x, s.y]), s.heading,
                           self.length, self.width)

    @property
    def effective_track_label(self) -> int:
        return self.track_label if self.track_label is not None else 100 + self.id

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "obj_class": self.obj_class,
            "length": self.length,
            "width": self.width,
            "segments": [s.to_dict() for s in self.segments],
            "t_start": self.t_start,
            "t_end": None if math.isinf(self.t_end) else self.t_end,
            "seen_by_grid": self.seen_by_grid,
            "seen_by_tracker": self.seen_by_tracker,
            "is_real": self.is_real,
            "track_label": self.track_label,
            "occlusions": [[lo, hi] for lo, hi in self.occlusions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruthObject":
        t_end = d.get("t_end")
        return cls(
            id=int(d["id"]),
            obj_class=d.get("obj_class", "unknown"),
            length=float(d["length"]),
            width=float(d["width"]),
            segments=[TrajectorySegment.from_dict(s) for s in d["segments"]],
            t_start=float(d.get("t_start", 0.0)),
            t_end=math.inf if t_end is None else float(t_end),
            seen_by_grid=bool(d.get("seen_by_grid", True)),
            seen_by_tracker=bool(d.get("seen_by_tracker", True)),
            is_real=bool(d.get("is_real", True)),
            track_label=d.get("track_label"),
            occlusions=[(float(lo), float(hi))
                        for lo, hi in d.get("occlusions", [])],
        )


@dataclass(frozen=True)
class StaticObstacle:
    """Stationary occupied structure (walls, parked vehicles, islands)."""

    center: tuple
    heading: float
    length: float
    width: float

    def box(self) -> OrientedBox:
        return OrientedBox(np.asarray(self.center, float), self.heading,
                           self.length, self.width)

    def to_dict(self) -> dict:
        return {"center": [float(self.center[0]), float(self.center[1])],
                "heading": float(self.heading),
                "length": float(self.length), "width": float(self.width)}

    @classmethod
    def from_dict(cls, d: dict) -> "StaticObstacle":
        return cls(center=tuple(d["center"]), heading=float(d["heading"]),
                   length=float(d["length"]), width=float(d["width"]))


@dataclass(frozen=True)
class GridSimConfig:
    """Grid stream rendering parameters."""

    rate_hz: float = 10.0
    phase: float = 0.0
    width_m: float = 120.0
    height_m: float = 120.0
    cell_size: float = 0.15
    sensor_range: float = 55.0     # free-space evidence disk radius
    free_mass: float = 0.65
    occ_mean: float = 0.85
    occ_noise: float = 0.03
    vel_noise: float = 0.15        # per-cell velocity noise for movers
    vel_var: float = 0.04          # reported velocity variance for movers
    static_vel_noise: float = 0.05
    static_vel_var: float = 10.0   # static cells carry no usable motion


@dataclass(frozen=True)
class TrackSimConfig:
    """Track stream rendering parameters."""

    rate_hz: float = 10.0
    phase: float = 0.05
    pos_noise: float = 0.08
    speed_noise: float = 0.08
    heading_noise: float = 0.02
    accel_noise: float = 0.05
    yaw_noise: float = 0.01
    p_detect: float = 1.0
    r_base: float = 0.88           # nominal existence level
    r_noise: float = 0.04
    pos_var: float = 0.09          # reported variances
    speed_var: float = 0.1
    accel_var: float = 0.25
    heading_var: float = 0.01
    yaw_var: float = 0.01
    occl_cov_growth: float = 8.0   # variance added per axis per second occluded
    occl_r_decay: float = 0.75     # existence factor per frame occluded
    fov_min: float = -math.radians(55.0)
    fov_max: float = math.radians(55.0)
    fov_range: float = 100.0

    def fov(self) -> FovSector:
        return FovSector(self.fov_min, self.fov_max, self.fov_range)


@dataclass
class ScenarioSpec:
    """Complete description of a simulated scene."""

    name: str
    duration: float
    seed: int
    description: str = ""
    grid: GridSimConfig = field(default_factory=GridSimConfig)
    track: TrackSimConfig = field(default_factory=TrackSimConfig)
    map_data: dict | None = None   # global-frame map JSON structure
    anchor_east: float = 0.0
    anchor_north: float = 0.0
    anchor_heading: float = 0.0
    objects: list = field(default_factory=list)
    obstacles: list = field(default_factory=list)

    def validate(self):
        if self.duration <= 0.0:
            raise ScenarioError("duration must be positive")
        if self.grid.rate_hz <= 0.0 or self.track.rate_hz <= 0.0:
            raise ScenarioError("stream rates must be positive")
        if self.grid.cell_size <= 0.0:
            raise ScenarioError("cell size must be positive")
        ids = [o.id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise ScenarioError("object ids must be unique")
        labels = [o.effective_track_label for o in self.objects
                  if o.seen_by_tracker]
        if len(labels) != len(set(labels)):
            raise ScenarioError("track labels must be unique")

    def anchor(self) -> FrameAnchor:
        """Rigid link between the global map frame and the ego frame."""
        return FrameAnchor(
            global_pose=GlobalEgoState(east=self.anchor_east,
                                       north=self.anchor_north,
                                       heading=self.anchor_heading),
            ego_pose=EgoState(),
        )

    def ego_pose_in_grid(self) -> tuple:
        return (0.5 * self.grid.width_m, 0.5 * self.grid.height_m, 0.0)

    def grid_frame_times(self) -> list:
        out, k = [], 0
        while True:
            t = self.grid.phase + k / self.grid.rate_hz
            if t > self.duration + 1e-9:
                return out
            out.append(t)
            k += 1

    def track_frame_times(self) -> list:
        out, k = [], 0
        while True:
            t = self.track.phase + k / self.track.rate_hz
            if t > self.duration + 1e-9:
                return out
            out.append(t)
            k += 1

    def real_objects(self) -> list:
        return [o for o in self.objects if o.is_real]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "duration": self.duration,
            "seed": self.seed,
            "grid": {k: float(getattr(self.grid, k))
                     for k in GridSimConfig.__dataclass_fields__},
            "track": {k: float(getattr(self.track, k))
                      for k in TrackSimConfig.__dataclass_fields__},
            "map_data": self.map_data,
            "anchor_east": self.anchor_east,
            "anchor_north": self.anchor_north,
            "anchor_heading": self.anchor_heading,
            "objects": [o.to_dict() for o in self.objects],
            "obstacles": [o.to_dict() for o in self.obstacles],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        try:
            return cls(
                name=d["name"],
                description=d.get("description", ""),
                duration=float(d["duration"]),
                seed=int(d["seed"]),
                grid=GridSimConfig(**d.get("grid", {})),
                track=TrackSimConfig(**d.get("track", {})),
                map_data=d.get("map_data"),
                anchor_east=float(d.get("anchor_east", 0.0)),
                anchor_north=float(d.get("anchor_north", 0.0)),
                anchor_heading=float(d.get("anchor_heading", 0.0)),
                objects=[GroundTruthObject.from_dict(o)
                         for o in d.get("objects", [])],
                obstacles=[StaticObstacle.from_dict(o)
                           for o in d.get("obstacles", [])],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from exc


# ---- rendering ----------------------------------------------------------------


def _frame_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Independent deterministic substream per (stream, frame)."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(stream, index)))


@lru_cache(maxsize=4)
def _free_disk(width_m: float, height_m: float, cell_size: float,
               sensor_range: float) -> np.ndarray:
    """Boolean mask of cells within sensor range of the grid center."""
    n_cols = int(round(width_m / cell_size))
    n_rows = int(round(height_m / cell_size))
    xs = (np.arange(n_cols) + 0.5) * cell_size - 0.5 * width_m
    ys = (np.arange(n_rows) + 0.5) * cell_size - 0.5 * height_m
    d2 = ys[:, None] ** 2 + xs[None, :] ** 2
    mask = d2 <= sensor_range * sensor_range
    mask.setflags(write=False)
    return mask


def _box_cells(box: OrientedBox, ego_xy, cell_size: float,
               n_rows: int, n_cols: int):
    """(rows, cols) of cells whose centers fall inside the box, plus a flag
    for footprints touching the grid boundary."""
    corners = box.corners() + np.asarray(ego_xy)
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    clipped = bool(lo[0] < 0.0 or lo[1] < 0.0
                   or hi[0] > n_cols * cell_size or hi[1] > n_rows * cell_size)
    c0 = max(0, int(math.floor(lo[0] / cell_size)))
    c1 = min(n_cols - 1, int(math.ceil(hi[0] / cell_size)))
    r0 = max(0, int(math.floor(lo[1] / cell_size)))
    r1 = min(n_rows - 1, int(math.ceil(hi[1] / cell_size)))
    if c0 > c1 or r0 > r1:
        return np.empty(0, int), np.empty(0, int), clipped
    cols = np.arange(c0, c1 + 1)
    rows = np.arange(r0, r1 + 1)
    cx = (cols + 0.5) * cell_size - ego_xy[0]
    cy = (rows + 0.5) * cell_size - ego_xy[1]
    px, py = np.meshgrid(cx, cy)
    pts = np.stack([px.ravel(), py.ravel()], axis=-1)
    inside = box.contains(pts)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return rr.ravel()[inside], cc.ravel()[inside], clipped


@dataclass
class RenderInfo:
    """Bookkeeping from rendering one grid frame."""

    clipped_ids: list = field(default_factory=list)
    rendered_ids: list = field(default_factory=list)


def render_dogma_frame_info(spec: ScenarioSpec,
                            frame_index: int) -> tuple[DogmaFrame, RenderInfo]:
    g = spec.grid
    t = g.phase + frame_index / g.rate_hz
    rng = _frame_rng(spec.seed, 0, frame_index)
    n_cols = int(round(g.width_m / g.cell_size))
    n_rows = int(round(g.height_m / g.cell_size))
    ego_xy = (0.5 * g.width_m, 0.5 * g.height_m)

    fields = {name: np.zeros((n_rows, n_cols)) for name in _FIELD_NAMES}
    fields["var_vx"] = np.ones((n_rows, n_cols))
    fields["var_vy"] = np.ones((n_rows, n_cols))
    disk = _free_disk(g.width_m, g.height_m, g.cell_size, g.sensor_range)
    fields["m_free"][disk] = g.free_mass

    info = RenderInfo()

    def paint(rows, cols, vel, vel_noise, vel_var):
        n = rows.size
        occ = np.clip(g.occ_mean + g.occ_noise * rng.standard_normal(n),
                      0.05, 0.98)
        fields["m_occ"][rows, cols] = occ
        fields["m_free"][rows, cols] = 0.02
        noise = vel_noise * rng.standard_normal((n, 2))
        fields["vel_x"][rows, cols] = vel[0] + noise[:, 0]
        fields["vel_y"][rows, cols] = vel[1] + noise[:, 1]
        fields["var_vx"][rows, cols] = vel_var
        fields["var_vy"][rows, cols] = vel_var
        fields["cov_vxvy"][rows, cols] = 0.0

    for obstacle in spec.obstacles:
        rows, cols, _ = _box_cells(obstacle.box(), ego_xy, g.cell_size,
                                   n_rows, n_cols)
        if rows.size:
            paint(rows, cols, (0.0, 0.0), g.static_vel_noise, g.static_vel_var)

    for obj in sorted(spec.objects, key=lambda o: o.id):
        if not (obj.seen_by_grid and obj.alive(t)) or obj.occluded_at(t):
            continue
        state = obj.state_at(t)
        rows, cols, clipped = _box_cells(obj.box_at(t), ego_xy, g.cell_size,
                                         n_rows, n_cols)
        if clipped:
            info.clipped_ids.append(obj.id)
        if rows.size == 0:
            continue
        vel = (state.v * math.cos(state.heading),
               state.v * math.sin(state.heading))
        paint(rows, cols, vel, g.vel_noise, g.vel_var)
        info.rendered_ids.append(obj.id)

    frame = DogmaFrame(g.width_m, g.height_m, g.cell_size, t,
                       spec.ego_pose_in_grid(), fields, validate=False)
    return frame, info


def render_dogma_frame(spec: ScenarioSpec, frame_index: int) -> DogmaFrame:
    return render_dogma_frame_info(spec, frame_index)[0]


def render_track_envelope(spec: ScenarioSpec,
                          frame_index: int) -> SampleEnvelope:
    cfg = spec.track
    t = cfg.phase + frame_index / cfg.rate_hz
    rng = _frame_rng(spec.seed, 1, frame_index)
    fov = cfg.fov()
    items = []
    for obj in sorted(spec.objects, key=lambda o: o.id):
        if not (obj.seen_by_tracker and obj.alive(t)):
            continue
        state = obj.state_at(t)
        center = np.array([state.x, state.y])
        if not fov.contains(center):
            continue
        if cfg.p_detect < 1.0 and rng.uniform() >= cfg.p_detect:
            continue
        age = obj.occlusion_age(t) if obj.occluded_at(t) else 0.0

        pos_sigma = cfg.pos_noise * (1.0 + 2.0 * age)
        center_meas = center + pos_sigma * rng.standard_normal(2)
        speed_meas = max(0.0, state.v + cfg.speed_noise * rng.standard_normal())
        heading_meas = state.heading + cfg.heading_noise * rng.standard_normal()
        accel_meas = state.a + cfg.accel_noise * rng.standard_normal()
        yaw_meas = state.yaw_rate + cfg.yaw_noise * rng.standard_normal()

        box = OrientedBox(center_meas, heading_meas, obj.length, obj.width)
        ref_label, ref_pos = box.nearest_anchor(np.zeros(2))

        grow = cfg.occl_cov_growth * age
        cov = np.diag([cfg.pos_var + grow, cfg.pos_var + grow,
                       cfg.speed_var + grow, cfg.accel_var,
                       cfg.heading_var, cfg.yaw_var])
        if age > 0.0:
            r = cfg.r_base * cfg.occl_r_decay ** (age * cfg.rate_hz)
        else:
            r = cfg.r_base + cfg.r_noise * rng.standard_normal()
        r = float(np.clip(r, 0.02, 0.995))

        items.append(TrackState(
            ref_pos=ref_pos, ref_label=ref_label, speed=speed_meas,
            accel=accel_meas, heading=heading_meas, yaw_rate=yaw_meas,
            bbox=box.corners(), cov=cov, existence=r,
            obj_class=obj.obj_class, label=obj.effective_track_label,
            timestamp=t,
        ))
    return SampleEnvelope(timestamp=t, source=TRACK_SOURCE, items=items)


# ---- canned scenarios -----------------------------------------------------------


_ANCHOR = dict(anchor_east=35200.0, anchor_north=82100.0, anchor_heading=0.3)


def _global_map(anchor: FrameAnchor, buildings_ego: list,
                lanes_ego: list) -> dict:
    """Author map geometry in the ego frame, store it in the global frame."""
    return {
        "buildings": [
            {"id": i + 1,
             "corners": anchor.ego_to_global_points(np.asarray(c, float)).tolist()}
            for i, c in enumerate(buildings_ego)
        ],
        "lanes": [
            {"id": i + 1,
             "points": anchor.ego_to_global_points(np.asarray(p, float)).tolist()}
            for i, p in enumerate(lanes_ego)
        ],
    }


def _straight_lane(y: float, x0: float = -58.0, x1: float = 58.0,
                   step: float = 2.0) -> np.ndarray:
    xs = np.arange(x0, x1 + 0.5 * step, step)
    return np.stack([xs, np.full_like(xs, y)], axis=-1)


def _spec_anchor() -> FrameAnchor:
    return FrameAnchor(
        global_pose=GlobalEgoState(east=_ANCHOR["anchor_east"],
                                   north=_ANCHOR["anchor_north"],
                                   heading=_ANCHOR["anchor_heading"]),
        ego_pose=EgoState(),
    )


def _build_passing_vehicles() -> ScenarioSpec:
    anchor = _spec_anchor()
    return ScenarioSpec(
        name="passing_vehicles",
        description="Two-lane road: a led vehicle ahead and an oncoming one; "
                    "guardrails on both sides stay static.",
        duration=9.9,
        seed=11,
        map_data=_global_map(anchor, [],
                             [_straight_lane(-1.75), _straight_lane(1.75)]),
        objects=[
            GroundTruthObject(
                id=1, obj_class="car", length=4.6, width=1.9,
                segments=[TrajectorySegment(0.0, x=8.0, y=-1.75, v=4.5)]),
            GroundTruthObject(
                id=2, obj_class="car", length=4.4, width=1.8,
                segments=[TrajectorySegment(0.0, x=55.0, y=1.75, v=6.0,
                                            heading=math.pi)]),
        ],
        obstacles=[
            StaticObstacle(center=(0.0, -9.0), heading=0.0, length=110.0,
                           width=0.4),
            StaticObstacle(center=(0.0, 9.5), heading=0.0, length=110.0,
                           width=0.4),
        ],
        **_ANCHOR,
    )


def _build_nominal_following() -> ScenarioSpec:
    anchor = _spec_anchor()
    return ScenarioSpec(
        name="nominal_following",
        description="Single led vehicle on a straight lane, one guardrail.",
        duration=5.9,
        seed=7,
        map_data=_global_map(anchor, [], [_straight_lane(0.0)]),
        objects=[
            GroundTruthObject(
                id=1, obj_class="car", length=4.6, width=1.9,
                segments=[TrajectorySegment(0.0, x=10.0, y=0.0, v=5.0)]),
        ],
        obstacles=[
            StaticObstacle(center=(0.0, -8.0), heading=0.0, length=110.0,
                           width=0.4),
        ],
        **_ANCHOR,
    )


def _build_roundabout_false_track() -> ScenarioSpec:
    anchor = _spec_anchor()
    return ScenarioSpec(
        name="roundabout_false_track",
        description="Two vehicles on a two-lane road; the tracker also "
                    "reports a phantom object on a traffic island, oriented "
                    "across the road.",
        duration=6.0,
        seed=23,
        map_data=_global_map(anchor, [],
                             [_straight_lane(-1.75), _straight_lane(1.75)]),
        objects=[
            GroundTruthObject(
                id=1, obj_class="car", length=4.6, width=1.9,
                segments=[TrajectorySegment(0.0, x=6.0, y=-1.75, v=5.0)]),
            GroundTruthObject(
                id=2, obj_class="car", length=4.4, width=1.8,
                segments=[TrajectorySegment(0.0, x=40.0, y=1.75, v=5.5,
                                            heading=math.pi)]),
            GroundTruthObject(
                id=7, obj_class="car", length=4.2, width=1.8,
                segments=[TrajectorySegment(0.5, x=18.0, y=4.2, v=0.8,
                                            heading=0.5 * math.pi)],
                t_start=0.5, seen_by_grid=False, is_real=False,
                track_label=7),
        ],
        obstacles=[
            StaticObstacle(center=(18.0, 4.2), heading=0.0, length=2.0,
                           width=1.2),
        ],
        **_ANCHOR,
    )


def _build_innercity_ghost_occlusion() -> ScenarioSpec:
    anchor = _spec_anchor()
    building = [(15.0, 8.0), (25.0, 8.0), (25.0, 16.0), (15.0, 16.0)]
    return ScenarioSpec(
        name="innercity_ghost_occlusion",
        description="Grid ghost circling inside a building; two crossing "
                    "cyclists that become fully occluded mid-run.",
        duration=6.0,
        seed=42,
        map_data=_global_map(anchor, [building], [_straight_lane(0.0)]),
        objects=[
            GroundTruthObject(
                id=3, obj_class="cyclist", length=1.9, width=0.7,
                segments=[TrajectorySegment(0.0, x=11.5, y=-7.0, v=2.2,
                                            heading=0.5 * math.pi)],
                track_label=61, occlusions=[(3.5, 6.0)]),
            GroundTruthObject(
                id=4, obj_class="cyclist", length=1.9, width=0.7,
                segments=[TrajectorySegment(0.0, x=14.0, y=-9.0, v=2.0,
                                            heading=0.5 * math.pi)],
                track_label=64, occlusions=[(3.5, 6.0)]),
            GroundTruthObject(
                id=9, obj_class="unknown", length=1.8, width=0.8,
                segments=[TrajectorySegment(0.0, x=19.0, y=12.0, v=2.0,
                                            yaw_rate=1.25)],
                seen_by_tracker=False, is_real=False),
        ],
        obstacles=[
            StaticObstacle(center=(7.0, -3.0), heading=0.0, length=6.0,
                           width=2.4),
        ],
        **_ANCHOR,
    )


SCENARIOS = {
    "passing_vehicles": _build_passing_vehicles,
    "nominal_following": _build_nominal_following,
    "roundabout_false_track": _build_roundabout_false_track,
    "innercity_ghost_occlusion": _build_innercity_ghost_occlusion,
}


def scenario_names() -> list:
    return sorted(SCENARIOS)


def canned_scenario(name: str, seed: int | None = None) -> ScenarioSpec:
    try:
        builder = SCENARIOS[name]
    except KeyError:
        raise ScenarioError(
            f"unknown scenario {name!r}; available: {', '.join(scenario_names())}"
        ) from None
    spec = builder()
    if seed is not None:
        spec = replace(spec, seed=int(seed))
    spec.validate()
    return spec
