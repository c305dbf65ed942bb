"""High-level fusion of grid-extracted objects and externally tracked
objects into a single set of meta objects.

Envelopes (one source, one timestamp, a batch of object samples) pass
through a waiting queue that tolerates bounded out-of-order arrival. Each
candidate sample is associated against the live meta objects, then judged
by three multiplicative confidence factors:

* physical (eta_p): is the implied motion since the last meta update
  dynamically plausible (acceleration, positional jump, top speed)?
* module (eta_e): how much does the reporting module itself trust the
  sample (track existence and covariance, grid persistence), scaled by
  whether the other module has recently confirmed the same meta object?
* map (eta_m): is the sample consistent with the digital map (not inside a
  building, moving along a nearby lane when it claims to be a vehicle)?

The combined confidence eta = eta_p * eta_e * eta_m gates creation and
update of meta objects; stale meta objects are pruned. Every judgement is
emitted as a ConfidenceRecord for downstream logging.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass

import numpy as np

from .assignment import CostMatrix, hungarian_assign
from .digital_map import (DigitalMap, EGO_FRAME, MapError, associate_rectangle,
                          point_in_building)
from .extraction import GridObject
from .geometry import FovSector, OrientedBox, wrap_angle

GRID_SOURCE = "grid"
TRACK_SOURCE = "track"

CLASS_UNKNOWN = "unknown"
# Classes that are judged against lane geometry. Unknown-class candidates
# (all grid objects) are included: a mover that cannot be ruled out as a
# vehicle must still be checked against the road.
VEHICLE_CLASSES = frozenset({"car", "truck", "bus", "van", "motorcycle"})
# Known non-vehicle classes are exempt from the lane term so legitimate
# off-road movers are not penalized.
NON_VEHICLE_CLASSES = frozenset({"pedestrian", "cyclist", "animal"})

# Confidence factors are clamped into [CONF_FLOOR, 1 - CONF_FLOOR] so no
# single factor can pin the product to exactly 0 or 1.
CONF_FLOOR = 1e-6


class OutOfOrderError(ValueError):
    """Envelope arrived later than the waiting queue tolerates."""


def _clamp(x: float) -> float:
    return min(max(float(x), CONF_FLOOR), 1.0 - CONF_FLOOR)


@dataclass
class TrackState:
    """One object sample from the external tracking module.

    cov is the 6x6 covariance over (x, y, speed, accel, heading, yaw rate);
    existence is the tracker's existence probability in (0, 1].
    """

    ref_pos: np.ndarray
    ref_label: str
    speed: float
    accel: float
    heading: float
    yaw_rate: float
    bbox: np.ndarray
    cov: np.ndarray
    existence: float
    obj_class: str
    label: int
    timestamp: float

    def __post_init__(self):
        self.ref_pos = np.asarray(self.ref_pos, dtype=float)
        self.bbox = np.asarray(self.bbox, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        self.heading = float(wrap_angle(self.heading))
        if self.cov.shape != (6, 6):
            raise ValueError("cov must be 6x6")
        if not 0.0 < self.existence <= 1.0:
            raise ValueError("existence must lie in (0, 1]")

    @property
    def center(self) -> np.ndarray:
        return self.bbox.mean(axis=0)

    def to_record(self) -> dict:
        return {
            "ref_pos": [float(v) for v in self.ref_pos],
            "ref_label": self.ref_label,
            "speed": float(self.speed),
            "accel": float(self.accel),
            "heading": float(self.heading),
            "yaw_rate": float(self.yaw_rate),
            "bbox": [[float(x) for x in row] for row in self.bbox],
            "cov": [[float(x) for x in row] for row in self.cov],
            "existence": float(self.existence),
            "obj_class": self.obj_class,
            "label": int(self.label),
            "timestamp": float(self.timestamp),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "TrackState":
        return cls(
            ref_pos=rec["ref_pos"], ref_label=rec["ref_label"],
            speed=float(rec["speed"]), accel=float(rec["accel"]),
            heading=float(rec["heading"]), yaw_rate=float(rec["yaw_rate"]),
            bbox=rec["bbox"], cov=rec["cov"],
            existence=float(rec["existence"]), obj_class=rec["obj_class"],
            label=int(rec["label"]), timestamp=float(rec["timestamp"]),
        )


@dataclass
class MetaObject:
    """Fused object hypothesis maintained across envelopes."""

    label: int
    ref_pos: np.ndarray
    ref_label: str
    speed: float
    heading: float
    length: float
    width: float
    bbox: np.ndarray
    obj_class: str
    confidence: float
    created_at: float
    last_update: float
    grid_hits: int = 0
    track_hits: int = 0
    last_grid_time: float | None = None
    last_track_time: float | None = None
    bound_grid_label: int | None = None
    bound_track_label: int | None = None

    def __post_init__(self):
        self.ref_pos = np.asarray(self.ref_pos, dtype=float)
        self.bbox = np.asarray(self.bbox, dtype=float)

    @property
    def center(self) -> np.ndarray:
        return self.bbox.mean(axis=0)

    def predicted_center(self, t: float) -> np.ndarray:
        """Constant-velocity prediction of the box center to time t."""
        dt = t - self.last_update
        return self.center + self.speed * dt * np.array(
            [math.cos(self.heading), math.sin(self.heading)])

    def to_record(self) -> dict:
        return {
            "label": int(self.label),
            "ref_pos": [float(v) for v in self.ref_pos],
            "ref_label": self.ref_label,
            "speed": float(self.speed),
            "heading": float(self.heading),
            "length": float(self.length),
            "width": float(self.width),
            "bbox": [[float(x) for x in row] for row in self.bbox],
            "obj_class": self.obj_class,
            "confidence": float(self.confidence),
            "created_at": float(self.created_at),
            "last_update": float(self.last_update),
            "grid_hits": int(self.grid_hits),
            "track_hits": int(self.track_hits),
        }


@dataclass(frozen=True)
class SampleEnvelope:
    """A batch of samples from one source at one timestamp."""

    timestamp: float
    source: str
    items: tuple

    def __post_init__(self):
        if self.source not in (GRID_SOURCE, TRACK_SOURCE):
            raise ValueError(f"unknown source {self.source!r}")
        object.__setattr__(self, "items", tuple(self.items))
        for item in self.items:
            if abs(item.timestamp - self.timestamp) > 1e-9:
                raise ValueError("item timestamp differs from the envelope")
            if item.label is None:
                raise ValueError("envelope items must be labeled")

    def to_record(self) -> dict:
        return {
            "timestamp": float(self.timestamp),
            "source": self.source,
            "items": [item.to_record() for item in self.items],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SampleEnvelope":
        loader = (GridObject.from_record if rec["source"] == GRID_SOURCE
                  else TrackState.from_record)
        return cls(
            timestamp=float(rec["timestamp"]),
            source=rec["source"],
            items=tuple(loader(item) for item in rec.get("items", [])),
        )


@dataclass(frozen=True)
class ConfidenceRecord:
    """Outcome of judging one candidate sample."""

    timestamp: float
    source: str
    candidate_label: int
    meta_label: int | None
    eta_p: float
    eta_e: float
    eta_m: float
    eta: float
    action: str  # created | updated | rejected
    reason: str | None = None

    def to_record(self) -> dict:
        return {
            "timestamp": float(self.timestamp),
            "source": self.source,
            "candidate_label": int(self.candidate_label),
            "meta_label": None if self.meta_label is None else int(self.meta_label),
            "eta_p": float(self.eta_p),
            "eta_e": float(self.eta_e),
            "eta_m": float(self.eta_m),
            "eta": float(self.eta),
            "action": self.action,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class FusionConfig:
    """Gates, scales and timing for the fusion stage.

    eta_min gates meta creation and update. It must stay below the ceiling
    for legitimate new objects: a fresh candidate scores a neutral 0.5
    physical factor, and known non-vehicle candidates carry the neutral
    lane term, so their ceiling is 0.5 * eta_e * lane_neutral <= 0.25.
    """

    eta_min: float = 0.15             # accept threshold on the product
    max_accel: float = 6.0            # plausible acceleration bound (m/s^2)
    max_speed: float = 60.0           # plausible speed bound (m/s)
    assoc_gate: float = 3.0           # associator center-distance gate (m)
    stale_timeout: float = 0.5        # prune + cross-confirmation recency (s)
    lateness_bound: float = 0.5       # queue tolerance for old envelopes (s)
    confirm_bonus_high: float = 1.5   # other module confirmed recently
    confirm_bonus_low: float = 0.6    # other module silent inside its FoV
    cov_scale: float = 10.0           # track covariance squash scale
    existence_scale: float = 3.0      # grid persistence ramp scale (frames)
    min_track_existence: float = 0.2  # tracks at or below are not considered
    building_penalty: float = 0.05    # map factor inside a building
    building_inset: float = 0.5       # "clearly inside" margin (m)
    lane_gate: float = 10.0           # rectangle association gate (m)
    lane_neutral: float = 0.5         # map factor with no usable lane
    heading_sigma: float = math.radians(30.0)
    offset_sigma: float = 3.0         # lateral offset scale (m)
    extent_smoothing: float = 0.5     # box extent update weight
    dt_floor: float = 0.05            # minimum dt for motion plausibility (s)
    fov_grid: FovSector = FovSector(-math.pi, math.pi, 45.0)
    fov_track: FovSector = FovSector(-math.radians(55.0),
                                     math.radians(55.0), 100.0)

    def validate(self):
        if not 0.0 < self.eta_min < 1.0:
            raise ValueError("eta_min must lie in (0, 1)")
        for name in ("max_accel", "max_speed", "assoc_gate", "stale_timeout",
                     "lateness_bound", "cov_scale", "existence_scale",
                     "heading_sigma", "offset_sigma", "dt_floor", "lane_gate"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.extent_smoothing <= 1.0:
            raise ValueError("extent_smoothing must lie in [0, 1]")
        if self.confirm_bonus_low > self.confirm_bonus_high:
            raise ValueError("confirm_bonus_low must not exceed confirm_bonus_high")


@dataclass(frozen=True)
class Candidate:
    """Source-independent view of one envelope item."""

    source: str
    label: int
    ref_pos: np.ndarray
    ref_label: str
    center: np.ndarray
    speed: float
    heading: float
    bbox: np.ndarray
    length: float
    width: float
    obj_class: str
    existence: float | None  # tracks only
    cov_trace: float | None  # tracks only: x, y, speed variances summed
    timestamp: float

    @staticmethod
    def from_item(source: str, item) -> "Candidate":
        box = OrientedBox.from_corners(item.bbox)
        if source == GRID_SOURCE:
            return Candidate(
                source=source, label=int(item.label),
                ref_pos=np.asarray(item.ref_pos, float),
                ref_label=item.ref_label,
                center=box.center, speed=float(item.speed),
                heading=float(item.orientation), bbox=np.asarray(item.bbox, float),
                length=box.length, width=box.width,
                obj_class=CLASS_UNKNOWN, existence=None, cov_trace=None,
                timestamp=float(item.timestamp),
            )
        return Candidate(
            source=source, label=int(item.label),
            ref_pos=np.asarray(item.ref_pos, float),
            ref_label=item.ref_label,
            center=box.center, speed=float(item.speed),
            heading=float(item.heading), bbox=np.asarray(item.bbox, float),
            length=box.length, width=box.width,
            obj_class=item.obj_class,
            existence=float(item.existence),
            cov_trace=float(item.cov[0, 0] + item.cov[1, 1] + item.cov[2, 2]),
            timestamp=float(item.timestamp),
        )


# ---- confidence factors ------------------------------------------------------


def physical_confidence(candidate: Candidate, meta: MetaObject | None,
                        now: float, cfg: FusionConfig) -> float:
    """Plausibility of the motion implied by accepting the candidate.

    Neutral 0.5 when there is no meta object yet (no motion to judge).
    Otherwise penalizes the implied acceleration, the jump between the
    candidate and the constant-velocity-predicted meta box center (centers,
    not reference points: the nearest anchor can legitimately flip between
    frames), and any speed above the plausible maximum.
    """
    if meta is None:
        return 0.5
    dt = max(now - meta.last_update, cfg.dt_floor)
    accel = (candidate.speed - meta.speed) / dt
    jump = float(np.hypot(*(candidate.center - meta.predicted_center(now))))
    jump_scale = 0.5 * cfg.max_accel * dt * dt + cfg.assoc_gate
    overspeed = max(0.0, candidate.speed - cfg.max_speed)
    value = (math.exp(-((accel / cfg.max_accel) ** 2))
             * math.exp(-((jump / jump_scale) ** 2))
             * math.exp(-((overspeed / (0.1 * cfg.max_speed)) ** 2)))
    return _clamp(value)


def module_confidence(candidate: Candidate, meta: MetaObject | None,
                      now: float, cfg: FusionConfig,
                      persistence: int = 1) -> float:
    """Source module's own trust in the sample, cross-scaled by the other
    module.

    Tracks: existence times a squash of the position/speed covariance
    trace. Grid objects: a saturating ramp in the consecutive-detection
    count of the grid label (persistence). The factor from the other
    module applies only when the candidate lies inside that module's FoV
    and a meta object exists to be confirmed: bonus_high when the other
    module updated it recently, bonus_low when it stayed silent.
    """
    if candidate.source == TRACK_SOURCE:
        raw = candidate.existence * math.exp(-candidate.cov_trace / cfg.cov_scale)
        other_fov = cfg.fov_grid
        last_other = None if meta is None else meta.last_grid_time
    else:
        raw = 1.0 - math.exp(-float(persistence) / cfg.existence_scale)
        other_fov = cfg.fov_track
        last_other = None if meta is None else meta.last_track_time

    factor = 1.0
    if meta is not None and other_fov.contains(candidate.ref_pos):
        if last_other is not None and now - last_other <= cfg.stale_timeout:
            factor = cfg.confirm_bonus_high
        else:
            factor = cfg.confirm_bonus_low
    return _clamp(raw * factor)


def map_confidence(candidate: Candidate, dmap: DigitalMap | None,
                   cfg: FusionConfig) -> float:
    """Consistency of the candidate with the digital map.

    Building term: heavy penalty when the reported position lies clearly
    inside a building footprint. Lane term: for vehicle or unknown-class
    candidates, closeness to the nearest lane rectangle in heading (folded,
    so the driving direction is free) and lateral offset; neutral when no
    rectangle is in reach or the class is a known non-vehicle.
    """
    if dmap is None:
        return _clamp(1.0)
    building = point_in_building(candidate.ref_pos, dmap,
                                 margin=cfg.building_inset)
    b_term = cfg.building_penalty if building is not None else 1.0

    if candidate.obj_class in NON_VEHICLE_CLASSES:
        lane_term = cfg.lane_neutral
    else:
        match = associate_rectangle(candidate.ref_pos, candidate.heading,
                                    dmap, gate=cfg.lane_gate)
        if match is None:
            lane_term = cfg.lane_neutral
        else:
            lane_term = math.exp(
                -((match.heading_deviation / cfg.heading_sigma) ** 2)
                - ((match.lateral_offset / cfg.offset_sigma) ** 2))
    return _clamp(b_term * lane_term)


def combined_confidence(eta_p: float, eta_e: float, eta_m: float) -> float:
    """The fused confidence is exactly the product of the three factors."""
    return eta_p * eta_e * eta_m


# ---- engine -------------------------------------------------------------------


@dataclass
class FusionStep:
    """Result of processing one envelope."""

    timestamp: float
    source: str
    records: list
    metas: list  # snapshot records of live meta objects, creation order


class FusionEngine:
    """Waiting queue plus meta-object maintenance.

    The digital map, when given, must be in the ego-stationary frame; all
    envelope geometry is interpreted in that frame.
    """

    def __init__(self, cfg: FusionConfig = FusionConfig(),
                 dmap: DigitalMap | None = None):
        cfg.validate()
        if dmap is not None and dmap.frame != EGO_FRAME:
            raise MapError("fusion needs the map in the ego-stationary frame")
        self.cfg = cfg
        self.dmap = dmap
        self.metas: dict[int, MetaObject] = {}
        self.watermark = -math.inf
        self._queue: list = []
        self._seq = 0
        self._next_meta_label = 1
        self._grid_streaks: dict[int, tuple[int, float]] = {}
        self._grid_binding: dict[int, int] = {}
        self._track_binding: dict[int, int] = {}

    # ---- queue ----

    def enqueue(self, envelope: SampleEnvelope):
        """Admit an envelope to the waiting queue.

        Envelopes older than the watermark by more than the lateness bound
        are refused: their effects could no longer be merged consistently.
        """
        if envelope.timestamp < self.watermark - self.cfg.lateness_bound:
            raise OutOfOrderError(
                f"envelope at {envelope.timestamp} is older than the "
                f"watermark {self.watermark} minus the lateness bound")
        heapq.heappush(self._queue, (envelope.timestamp, self._seq, envelope))
        self._seq += 1

    @property
    def queue_depth(self) -> int:
        return len(self._queue)

    def process_next(self) -> FusionStep | None:
        """Process the oldest queued envelope."""
        if not self._queue:
            return None
        t, _, envelope = heapq.heappop(self._queue)
        self.watermark = max(self.watermark, t)
        return self._process(envelope)

    def process_all(self) -> list[FusionStep]:
        steps = []
        while self._queue:
            steps.append(self.process_next())
        return steps

    def ingest(self, envelope: SampleEnvelope) -> list[FusionStep]:
        self.enqueue(envelope)
        return self.process_all()

    # ---- internals ----

    def _snapshot(self) -> list:
        return [m.to_record() for m in self.metas.values()]

    def _grid_persistence(self, label: int, now: float) -> int:
        count, last_t = self._grid_streaks.get(label, (0, -math.inf))
        if now - last_t <= self.cfg.stale_timeout:
            return count + 1
        return 1

    def _process(self, envelope: SampleEnvelope) -> FusionStep:
        cfg = self.cfg
        now = envelope.timestamp
        records: list[ConfidenceRecord] = []

        candidates: list[Candidate] = []
        seen = set()
        for item in envelope.items:
            cand = Candidate.from_item(envelope.source, item)
            if cand.label in seen:
                records.append(ConfidenceRecord(
                    timestamp=now, source=envelope.source,
                    candidate_label=cand.label, meta_label=None,
                    eta_p=0.0, eta_e=0.0, eta_m=0.0, eta=0.0,
                    action="rejected", reason="duplicate_label"))
                continue
            seen.add(cand.label)
            if (cand.source == TRACK_SOURCE
                    and cand.existence <= cfg.min_track_existence):
                records.append(ConfidenceRecord(
                    timestamp=now, source=envelope.source,
                    candidate_label=cand.label, meta_label=None,
                    eta_p=0.0, eta_e=0.0, eta_m=0.0, eta=0.0,
                    action="rejected", reason="existence_floor"))
                continue
            candidates.append(cand)

        persistence = {}
        if envelope.source == GRID_SOURCE:
            for cand in candidates:
                p = self._grid_persistence(cand.label, now)
                persistence[cand.label] = p
                self._grid_streaks[cand.label] = (p, now)

        matched = self._associate(candidates, envelope.source, now)

        for cand in candidates:
            meta = matched.get(cand.label)
            eta_p = physical_confidence(cand, meta, now, cfg)
            eta_e = module_confidence(cand, meta, now, cfg,
                                      persistence.get(cand.label, 1))
            eta_m = map_confidence(cand, self.dmap, cfg)
            eta = combined_confidence(eta_p, eta_e, eta_m)

            if meta is not None:
                meta.confidence = eta  # latest judgement, accepted or not
                if eta >= cfg.eta_min:
                    self._update_meta(meta, cand, eta, now)
                    action, reason = "updated", None
                else:
                    action, reason = "rejected", "below_gate"
                meta_label = meta.label
            elif eta >= cfg.eta_min:
                meta_label = self._create_meta(cand, eta, now)
                action, reason = "created", None
            else:
                meta_label, action, reason = None, "rejected", "below_gate"

            records.append(ConfidenceRecord(
                timestamp=now, source=envelope.source,
                candidate_label=cand.label, meta_label=meta_label,
                eta_p=eta_p, eta_e=eta_e, eta_m=eta_m, eta=eta,
                action=action, reason=reason))

        self._prune(now)
        return FusionStep(timestamp=now, source=envelope.source,
                          records=records, metas=self._snapshot())

    def _associate(self, candidates: list[Candidate], source: str,
                   now: float) -> dict[int, MetaObject]:
        """Match candidates to live metas.

        A candidate whose source label is bound to a live meta claims it
        directly (sanity-checked at three gates); the rest go through a
        gated minimum-cost assignment on predicted center distance.
        """
        cfg = self.cfg
        binding = (self._grid_binding if source == GRID_SOURCE
                   else self._track_binding)
        matched: dict[int, MetaObject] = {}
        claimed: set[int] = set()
        loose: list[Candidate] = []
        for cand in candidates:
            meta_label = binding.get(cand.label)
            meta = self.metas.get(meta_label) if meta_label is not None else None
            if meta is not None and meta.label not in claimed:
                dist = float(np.hypot(*(cand.center - meta.predicted_center(now))))
                if dist <= 3.0 * cfg.assoc_gate:
                    matched[cand.label] = meta
                    claimed.add(meta.label)
                    continue
            loose.append(cand)

        free_metas = [m for m in self.metas.values() if m.label not in claimed]
        if loose and free_metas:
            cost = np.array([
                [float(np.hypot(*(c.center - m.predicted_center(now))))
                 for m in free_metas]
                for c in loose])
            result = hungarian_assign(CostMatrix.gated(cost, cfg.assoc_gate))
            for r, c in result.pairs:
                matched[loose[r].label] = free_metas[c]
        return matched

    def _bind(self, meta: MetaObject, cand: Candidate):
        if cand.source == GRID_SOURCE:
            if meta.bound_grid_label is not None:
                self._grid_binding.pop(meta.bound_grid_label, None)
            meta.bound_grid_label = cand.label
            self._grid_binding[cand.label] = meta.label
        else:
            if meta.bound_track_label is not None:
                self._track_binding.pop(meta.bound_track_label, None)
            meta.bound_track_label = cand.label
            self._track_binding[cand.label] = meta.label

    def _create_meta(self, cand: Candidate, eta: float, now: float) -> int:
        label = self._next_meta_label
        self._next_meta_label += 1
        meta = MetaObject(
            label=label,
            ref_pos=cand.ref_pos.copy(),
            ref_label=cand.ref_label,
            speed=cand.speed,
            heading=cand.heading,
            length=cand.length,
            width=cand.width,
            bbox=cand.bbox.copy(),
            obj_class=cand.obj_class,
            confidence=eta,
            created_at=now,
            last_update=now,
        )
        if cand.source == GRID_SOURCE:
            meta.grid_hits = 1
            meta.last_grid_time = now
        else:
            meta.track_hits = 1
            meta.last_track_time = now
        self.metas[label] = meta
        self._bind(meta, cand)
        return label

    def _update_meta(self, meta: MetaObject, cand: Candidate, eta: float,
                     now: float):
        """Fold an accepted candidate into the meta object.

        Pose and speed are overwritten by the accepted sample. Which box
        extent the sample can testify about depends on its reference
        anchor: seeing the back or front edge fixes the width, seeing a
        side fixes the length, a corner fixes both. The witnessed extents
        blend exponentially; the box is rebuilt from the candidate anchor.
        """
        cfg = self.cfg
        alpha = cfg.extent_smoothing
        witnessed_width = cand.ref_label in ("b", "f", "bl", "fl", "fr", "br")
        witnessed_length = cand.ref_label in ("l", "r", "bl", "fl", "fr", "br")
        if witnessed_width:
            meta.width = (1.0 - alpha) * meta.width + alpha * cand.width
        if witnessed_length:
            meta.length = (1.0 - alpha) * meta.length + alpha * cand.length

        meta.ref_pos = cand.ref_pos.copy()
        meta.ref_label = cand.ref_label
        meta.speed = cand.speed
        meta.heading = cand.heading
        meta.bbox = OrientedBox.from_anchor(
            cand.ref_label, cand.ref_pos, cand.heading,
            meta.length, meta.width).corners()
        if cand.source == TRACK_SOURCE and cand.obj_class != CLASS_UNKNOWN:
            meta.obj_class = cand.obj_class
        if cand.source == GRID_SOURCE:
            meta.grid_hits += 1
            meta.last_grid_time = now
        else:
            meta.track_hits += 1
            meta.last_track_time = now
        meta.confidence = eta
        meta.last_update = now
        self._bind(meta, cand)

    def _prune(self, now: float):
        """Drop meta objects whose last accepted update is too old, and
        garbage-collect streaks and bindings."""
        stale = [label for label, m in self.metas.items()
                 if now - m.last_update > self.cfg.stale_timeout]
        for label in stale:
            meta = self.metas.pop(label)
            if meta.bound_grid_label is not None:
                self._grid_binding.pop(meta.bound_grid_label, None)
            if meta.bound_track_label is not None:
                self._track_binding.pop(meta.bound_track_label, None)
        horizon = 2.0 * self.cfg.stale_timeout
        dead = [lbl for lbl, (_, t) in self._grid_streaks.items()
                if now - t > horizon]
        for lbl in dead:
            del self._grid_streaks[lbl]


# ---- envelope files -----------------------------------------------------------


def write_envelopes_jsonl(envelopes, path):
    with open(path, "w", encoding="utf-8") as fh:
        for env in envelopes:
            fh.write(json.dumps(env.to_record(), separators=(",", ":"),
                                sort_keys=True))
            fh.write("\n")


def read_envelopes_jsonl(path) -> list[SampleEnvelope]:
    envelopes = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                envelopes.append(SampleEnvelope.from_record(json.loads(line)))
    return envelopes
