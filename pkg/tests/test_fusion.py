import math
from dataclasses import replace

import numpy as np
import pytest

from gridfuse.digital_map import EGO_FRAME, MapError, map_from_dict
from gridfuse.extraction import GridObject
from gridfuse.fusion import (
    CLASS_UNKNOWN,
    CONF_FLOOR,
    Candidate,
    ConfidenceRecord,
    FusionConfig,
    FusionEngine,
    GRID_SOURCE,
    MetaObject,
    OutOfOrderError,
    SampleEnvelope,
    TRACK_SOURCE,
    TrackState,
    combined_confidence,
    map_confidence,
    module_confidence,
    physical_confidence,
    read_envelopes_jsonl,
    write_envelopes_jsonl,
)
from gridfuse.geometry import OrientedBox

CFG = FusionConfig()


def track_item(label, center, *, ref_label="b", heading=0.0, speed=5.0,
               length=4.0, width=2.0, existence=0.9, cov_diag=0.1,
               obj_class="car", accel=0.0, t=0.0):
    box = OrientedBox(np.asarray(center, float), heading, length, width)
    return TrackState(
        ref_pos=box.anchor(ref_label), ref_label=ref_label, speed=speed,
        accel=accel, heading=heading, yaw_rate=0.0, bbox=box.corners(),
        cov=np.eye(6) * cov_diag, existence=existence, obj_class=obj_class,
        label=label, timestamp=t)


def grid_item(label, center, *, ref_label="b", heading=0.0, speed=5.0,
              length=4.0, width=2.0, cell_count=20, t=0.0):
    box = OrientedBox(np.asarray(center, float), heading, length, width)
    return GridObject(
        ref_pos=box.anchor(ref_label), ref_label=ref_label, speed=speed,
        orientation=heading, bbox=box.corners(), timestamp=t, label=label,
        cell_count=cell_count)


def env(t, source, *items):
    return SampleEnvelope(timestamp=t, source=source, items=items)


def make_meta(center=(12.0, 0.0), speed=5.0, heading=0.0, length=4.0,
              width=2.0, t=0.0, **kw):
    box = OrientedBox(np.asarray(center, float), heading, length, width)
    fields = dict(label=1, ref_pos=box.anchor("b"), ref_label="b",
                  speed=speed, heading=heading, length=length, width=width,
                  bbox=box.corners(), obj_class=CLASS_UNKNOWN,
                  confidence=0.5, created_at=t, last_update=t)
    fields.update(kw)
    return MetaObject(**fields)


class TestDataModel:
    def test_track_state_validation(self):
        with pytest.raises(ValueError):
            track_item(1, (0, 0), existence=0.0)
        with pytest.raises(ValueError):
            track_item(1, (0, 0), existence=1.1)
        item = track_item(1, (0, 0))
        with pytest.raises(ValueError):
            TrackState(**{**item.to_record(), "cov": np.eye(5)})

    def test_envelope_validation(self):
        with pytest.raises(ValueError):
            env(0.0, "radar", track_item(1, (0, 0)))
        with pytest.raises(ValueError):
            env(0.5, TRACK_SOURCE, track_item(1, (0, 0), t=0.4))
        with pytest.raises(ValueError):
            env(0.0, GRID_SOURCE, grid_item(None, (0, 0)))

    def test_envelope_jsonl_round_trip(self, tmp_path):
        envelopes = [
            env(0.0, TRACK_SOURCE, track_item(101, (10, 2), heading=0.3)),
            env(0.1, GRID_SOURCE, grid_item(5, (8, -1), speed=2.5, t=0.1),
                grid_item(6, (4, 4), t=0.1)),
        ]
        path = tmp_path / "envelopes.jsonl"
        write_envelopes_jsonl(envelopes, path)
        back = read_envelopes_jsonl(path)
        assert len(back) == 2
        assert back[0].source == TRACK_SOURCE
        assert back[1].items[1].label == 6
        np.testing.assert_allclose(back[0].items[0].bbox,
                                   envelopes[0].items[0].bbox)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            replace(CFG, eta_min=0.0).validate()
        with pytest.raises(ValueError):
            replace(CFG, extent_smoothing=1.5).validate()
        with pytest.raises(ValueError):
            replace(CFG, confirm_bonus_low=2.0).validate()


class TestPhysicalPlausibility:
    def _cand(self, **kw):
        return Candidate.from_item(GRID_SOURCE, grid_item(1, **kw))

    def test_no_meta_is_neutral(self):
        cand = self._cand(center=(12.0, 0.0))
        assert physical_confidence(cand, None, 0.0, CFG) == 0.5

    def test_hand_computed_value(self):
        meta = make_meta(center=(12.0, 0.0), speed=5.0)
        # predicted center at t=0.1 is (12.5, 0)
        cand = self._cand(center=(12.6, 0.0), speed=5.6, t=0.1)
        got = physical_confidence(cand, meta, 0.1, CFG)
        accel = 0.6 / 0.1
        jump_scale = 0.5 * CFG.max_accel * 0.01 + CFG.assoc_gate
        want = (math.exp(-((accel / CFG.max_accel) ** 2))
                * math.exp(-((0.1 / jump_scale) ** 2)))
        assert got == pytest.approx(want, rel=1e-12)

    def test_dt_is_floored(self):
        meta = make_meta(center=(12.0, 0.0), speed=5.0)
        cand = self._cand(center=(12.0, 0.0), speed=5.3, t=0.0)
        got = physical_confidence(cand, meta, 0.0, CFG)
        accel = 0.3 / CFG.dt_floor
        want = math.exp(-((accel / CFG.max_accel) ** 2))
        assert got == pytest.approx(want, rel=1e-12)

    def test_overspeed_penalty(self):
        meta = make_meta(center=(12.0, 0.0), speed=66.0)
        cand = self._cand(center=(18.6, 0.0), speed=66.0, t=0.1)
        slow = make_meta(center=(12.0, 0.0), speed=60.0)
        cand_slow = self._cand(center=(18.0, 0.0), speed=60.0, t=0.1)
        fast = physical_confidence(cand, meta, 0.1, CFG)
        base = physical_confidence(cand_slow, slow, 0.1, CFG)
        # 6 m/s over the cap costs a factor exp(-1); the base sits at the
        # clamp ceiling rather than exactly 1
        assert base == 1.0 - CONF_FLOOR
        assert fast / base == pytest.approx(math.exp(-1.0) / (1.0 - CONF_FLOOR),
                                            rel=1e-12)

    def test_clamped_above_floor(self):
        meta = make_meta(center=(0.0, 0.0), speed=0.0)
        cand = self._cand(center=(500.0, 0.0), speed=59.0, t=0.1)
        assert physical_confidence(cand, meta, 0.1, CFG) == CONF_FLOOR


class TestModuleTrust:
    def test_track_raw_value(self):
        cand = Candidate.from_item(
            TRACK_SOURCE, track_item(1, (10, 0), existence=0.9, cov_diag=0.1))
        got = module_confidence(cand, None, 0.0, CFG)
        assert got == pytest.approx(0.9 * math.exp(-0.3 / CFG.cov_scale),
                                    rel=1e-12)

    def test_grid_persistence_ramp(self):
        cand = Candidate.from_item(GRID_SOURCE, grid_item(1, (10, 0)))
        one = module_confidence(cand, None, 0.0, CFG, persistence=1)
        three = module_confidence(cand, None, 0.0, CFG, persistence=3)
        assert one == pytest.approx(1.0 - math.exp(-1.0 / 3.0), rel=1e-12)
        assert three == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)
        assert one < three

    def test_confirmation_bonus_recent(self):
        # track module saw this object 0.1 s ago, candidate ahead of ego
        meta = make_meta(center=(20.0, 0.0), last_track_time=0.0)
        cand = Candidate.from_item(
            GRID_SOURCE, grid_item(1, (20.0, 0.0), t=0.1))
        got = module_confidence(cand, meta, 0.1, CFG, persistence=2)
        want = (1.0 - math.exp(-2.0 / 3.0)) * CFG.confirm_bonus_high
        assert got == pytest.approx(want, rel=1e-12)

    def test_confirmation_penalty_silent(self):
        meta = make_meta(center=(20.0, 0.0))  # never seen by the tracker
        cand = Candidate.from_item(
            GRID_SOURCE, grid_item(1, (20.0, 0.0), t=0.1))
        got = module_confidence(cand, meta, 0.1, CFG, persistence=2)
        want = (1.0 - math.exp(-2.0 / 3.0)) * CFG.confirm_bonus_low
        assert got == pytest.approx(want, rel=1e-12)

    def test_no_cross_factor_outside_fov(self):
        # behind the ego: outside the forward tracking cone
        meta = make_meta(center=(-10.0, 0.0), ref_label="f")
        box = OrientedBox(np.array([-10.0, 0.0]), 0.0, 4.0, 2.0)
        meta.ref_pos = box.anchor("f")
        cand = Candidate.from_item(
            GRID_SOURCE, grid_item(1, (-10.0, 0.0), ref_label="f", t=0.1))
        got = module_confidence(cand, meta, 0.1, CFG, persistence=2)
        assert got == pytest.approx(1.0 - math.exp(-2.0 / 3.0), rel=1e-12)

    def test_low_existence_track_with_silent_grid(self):
        meta = make_meta(center=(20.0, 0.0), last_grid_time=None)
        cand = Candidate.from_item(
            TRACK_SOURCE,
            track_item(1, (20.0, 0.0), existence=0.2, cov_diag=0.0, t=0.1))
        got = module_confidence(cand, meta, 0.1, CFG)
        assert got == pytest.approx(0.2 * CFG.confirm_bonus_low, rel=1e-12)


class TestMapConsistency:
    @pytest.fixture
    def dmap(self):
        return map_from_dict({
            "buildings": [{
                "id": 1,
                "corners": [[20, 20], [30, 20], [30, 30], [20, 30]],
            }],
            "lanes": [{
                "id": 1,
                "points": [[-50.0, 0.0], [50.0, 0.0]],
                "width": 4.0,
            }],
        }, frame=EGO_FRAME)

    def _cand(self, center, heading=0.0, obj_class="car"):
        return Candidate.from_item(
            TRACK_SOURCE,
            track_item(1, center, heading=heading, obj_class=obj_class))

    def test_no_map_is_neutral(self):
        assert map_confidence(self._cand((5, 5)), None, CFG) == 1.0 - CONF_FLOOR

    def test_vehicle_on_lane(self, dmap):
        got = map_confidence(self._cand((5.0, 0.5)), dmap, CFG)
        assert got == pytest.approx(
            math.exp(-((0.5 / CFG.offset_sigma) ** 2)), rel=1e-9)

    def test_opposite_driving_direction_is_free(self, dmap):
        with_flow = map_confidence(self._cand((5.0, 0.5)), dmap, CFG)
        against = map_confidence(
            self._cand((5.0, 0.5), heading=math.pi), dmap, CFG)
        assert against == pytest.approx(with_flow, rel=1e-9)

    def test_heading_deviation_costs(self, dmap):
        cand = self._cand((5.0, 0.0), heading=math.radians(30.0))
        # lateral offset is judged at the reference anchor, not the center
        lat = float(cand.ref_pos[1])
        skewed = map_confidence(cand, dmap, CFG)
        assert skewed == pytest.approx(
            math.exp(-1.0 - (lat / CFG.offset_sigma) ** 2), rel=1e-9)

    def test_far_from_lanes_is_neutral(self, dmap):
        got = map_confidence(self._cand((5.0, 45.0)), dmap, CFG)
        assert got == CFG.lane_neutral

    def test_clearly_inside_building(self, dmap):
        got = map_confidence(self._cand((25.0, 25.0)), dmap, CFG)
        assert got == pytest.approx(CFG.building_penalty * CFG.lane_neutral,
                                    rel=1e-12)

    def test_wall_margin_forgives(self, dmap):
        # 0.3 m inside the wall: inside, but not clearly inside
        hugging = map_confidence(self._cand((20.3, 25.0)), dmap, CFG)
        assert hugging == CFG.lane_neutral

    def test_non_vehicle_skips_lane_term(self, dmap):
        walker = self._cand((5.0, 0.5), obj_class="pedestrian")
        assert map_confidence(walker, dmap, CFG) == CFG.lane_neutral
        inside = self._cand((25.0, 25.0), obj_class="pedestrian")
        assert map_confidence(inside, dmap, CFG) == pytest.approx(
            CFG.building_penalty * CFG.lane_neutral, rel=1e-12)


class TestCombinedConfidence:
    def test_exact_product(self, rng):
        for _ in range(200):
            a, b, c = rng.uniform(1e-6, 1.0, size=3)
            assert combined_confidence(a, b, c) == a * b * c

    def test_engine_records_are_exact_products(self):
        engine = FusionEngine()
        engine.ingest(env(0.0, TRACK_SOURCE,
                          track_item(101, (10, 0), t=0.0),
                          track_item(102, (10, 8), t=0.0, existence=0.4)))
        steps = engine.ingest(env(0.1, GRID_SOURCE,
                                  grid_item(1, (10.5, 0), t=0.1),
                                  grid_item(2, (-20, 3), t=0.1)))
        for step in steps:
            for rec in step.records:
                assert rec.eta == rec.eta_p * rec.eta_e * rec.eta_m


class TestQueue:
    def test_processes_in_timestamp_order(self):
        engine = FusionEngine()
        engine.enqueue(env(0.3, TRACK_SOURCE, track_item(1, (10, 0), t=0.3)))
        engine.enqueue(env(0.1, TRACK_SOURCE, track_item(2, (10, 5), t=0.1)))
        engine.enqueue(env(0.2, GRID_SOURCE, grid_item(3, (5, 5), t=0.2)))
        steps = engine.process_all()
        assert [s.timestamp for s in steps] == [0.1, 0.2, 0.3]
        assert engine.watermark == 0.3
        assert engine.queue_depth == 0

    def test_rejects_too_old(self):
        engine = FusionEngine()
        engine.ingest(env(1.0, TRACK_SOURCE, track_item(1, (10, 0), t=1.0)))
        with pytest.raises(OutOfOrderError):
            engine.enqueue(env(0.49, TRACK_SOURCE,
                               track_item(2, (10, 5), t=0.49)))
        # exactly at the lateness bound is still admissible
        engine.enqueue(env(0.5, TRACK_SOURCE, track_item(3, (10, 5), t=0.5)))

    def test_process_next_empty(self):
        assert FusionEngine().process_next() is None


class TestEngineLifecycle:
    def test_track_creates_meta(self):
        engine = FusionEngine()
        step = engine.ingest(env(0.0, TRACK_SOURCE,
                                 track_item(101, (10, 0), t=0.0)))[0]
        rec = step.records[0]
        assert rec.action == "created"
        assert rec.eta_p == 0.5
        assert rec.meta_label == 1
        meta = engine.metas[1]
        assert meta.obj_class == "car"
        assert meta.track_hits == 1 and meta.grid_hits == 0
        assert meta.confidence == rec.eta
        assert step.metas[0]["label"] == 1

    def test_existence_floor_inclusive(self):
        engine = FusionEngine()
        step = engine.ingest(env(0.0, TRACK_SOURCE,
                                 track_item(101, (10, 0), existence=0.2,
                                            t=0.0)))[0]
        assert step.records[0].action == "rejected"
        assert step.records[0].reason == "existence_floor"
        assert engine.metas == {}
        # just above the floor the sample is judged on its merits (and
        # still loses, but at the confidence gate, not the floor)
        step = engine.ingest(env(0.1, TRACK_SOURCE,
                                 track_item(102, (10, 0), existence=0.21,
                                            t=0.1)))[0]
        assert step.records[0].reason == "below_gate"
        step = engine.ingest(env(0.2, TRACK_SOURCE,
                                 track_item(103, (10, 0), existence=0.9,
                                            t=0.2)))[0]
        assert step.records[0].action == "created"

    def test_duplicate_labels_rejected(self):
        engine = FusionEngine()
        step = engine.ingest(env(0.0, TRACK_SOURCE,
                                 track_item(7, (10, 0), t=0.0),
                                 track_item(7, (30, 0), t=0.0)))[0]
        assert [r.action for r in step.records] == ["rejected", "created"]
        assert step.records[0].reason == "duplicate_label"
        assert len(engine.metas) == 1

    def test_grid_needs_two_consecutive_frames(self):
        engine = FusionEngine()
        first = engine.ingest(env(0.0, GRID_SOURCE,
                                  grid_item(1, (10, 0), t=0.0)))[0]
        rec = first.records[0]
        assert rec.action == "rejected" and rec.reason == "below_gate"
        want = 0.5 * (1.0 - math.exp(-1.0 / 3.0)) * (1.0 - CONF_FLOOR)
        assert rec.eta == pytest.approx(want, rel=1e-12)
        assert engine.metas == {}

        second = engine.ingest(env(0.1, GRID_SOURCE,
                                   grid_item(1, (10.5, 0), t=0.1)))[0]
        rec = second.records[0]
        assert rec.action == "created"
        want = 0.5 * (1.0 - math.exp(-2.0 / 3.0)) * (1.0 - CONF_FLOOR)
        assert rec.eta == pytest.approx(want, rel=1e-12)

    def test_rejection_still_updates_confidence(self):
        engine = FusionEngine()
        engine.ingest(env(0.0, TRACK_SOURCE, track_item(101, (10, 0), t=0.0)))
        before = engine.metas[1].confidence
        # same object id, absurd speed change: implausible motion
        step = engine.ingest(env(0.1, TRACK_SOURCE,
                                 track_item(101, (10.5, 0), speed=45.0,
                                            t=0.1)))[0]
        rec = step.records[0]
        assert rec.action == "rejected" and rec.reason == "below_gate"
        assert rec.meta_label == 1
        meta = engine.metas[1]
        assert meta.confidence == rec.eta < before
        assert meta.speed == 5.0           # rejected sample left no trace
        assert meta.last_update == 0.0

    def test_prune_after_stale_timeout(self):
        engine = FusionEngine()
        engine.ingest(env(0.0, TRACK_SOURCE, track_item(101, (10, 0), t=0.0)))
        engine.ingest(env(0.4, GRID_SOURCE))      # within timeout: kept
        assert 1 in engine.metas
        engine.ingest(env(0.51, GRID_SOURCE))     # beyond: dropped
        assert engine.metas == {}
        # stale binding must not resurrect the old meta
        step = engine.ingest(env(0.6, TRACK_SOURCE,
                                 track_item(101, (12, 0), t=0.6)))[0]
        assert step.records[0].action == "created"
        assert step.records[0].meta_label == 2

    def test_extent_witnesses(self):
        engine = FusionEngine()
        engine.ingest(env(0.0, TRACK_SOURCE,
                          track_item(101, (12, 0), ref_label="bl",
                                     length=4.0, width=2.0, t=0.0)))
        meta = engine.metas[1]
        assert (meta.length, meta.width) == (4.0, 2.0)

        # back edge: testifies about width only
        engine.ingest(env(0.1, TRACK_SOURCE,
                          track_item(101, meta.predicted_center(0.1),
                                     ref_label="b", length=6.0, width=3.0,
                                     t=0.1)))
        assert meta.length == pytest.approx(4.0)
        assert meta.width == pytest.approx(2.5)

        # side edge: testifies about length only
        engine.ingest(env(0.2, TRACK_SOURCE,
                          track_item(101, meta.predicted_center(0.2),
                                     ref_label="l", length=8.0, width=3.0,
                                     t=0.2)))
        assert meta.length == pytest.approx(6.0)
        assert meta.width == pytest.approx(2.5)

        # corner: testifies about both
        engine.ingest(env(0.3, TRACK_SOURCE,
                          track_item(101, meta.predicted_center(0.3),
                                     ref_label="fr", length=4.0, width=2.0,
                                     t=0.3)))
        assert meta.length == pytest.approx(5.0)
        assert meta.width == pytest.approx(2.25)

    def test_class_upgrade_from_track_only(self):
        engine = FusionEngine()
        engine.ingest(env(0.0, GRID_SOURCE, grid_item(1, (10, 0), t=0.0)))
        engine.ingest(env(0.1, GRID_SOURCE, grid_item(1, (10.5, 0), t=0.1)))
        meta = engine.metas[1]
        assert meta.obj_class == CLASS_UNKNOWN

        engine.ingest(env(0.15, TRACK_SOURCE,
                          track_item(101, meta.predicted_center(0.15),
                                     obj_class="car", t=0.15)))
        assert meta.obj_class == "car"
        engine.ingest(env(0.2, GRID_SOURCE,
                          grid_item(1, meta.predicted_center(0.2), t=0.2)))
        assert meta.obj_class == "car"
        engine.ingest(env(0.25, TRACK_SOURCE,
                          track_item(101, meta.predicted_center(0.25),
                                     obj_class=CLASS_UNKNOWN, t=0.25)))
        assert meta.obj_class == "car"

    def test_label_claim_beyond_association_gate(self):
        engine = FusionEngine()
        engine.ingest(env(0.0, TRACK_SOURCE, track_item(101, (12, 0), t=0.0)))
        meta = engine.metas[1]
        # 6 m off the prediction: outside the 3 m associator gate but the
        # label binding claims the meta at up to three gates
        center = meta.predicted_center(0.1) + np.array([6.0, 0.0])
        step = engine.ingest(env(0.1, TRACK_SOURCE,
                                 track_item(101, center, t=0.1)))[0]
        rec = step.records[0]
        assert rec.meta_label == 1
        assert rec.action == "rejected" and rec.reason == "below_gate"
        assert engine.metas[1].confidence == rec.eta

    def test_jump_beyond_claim_sanity_creates_new(self):
        engine = FusionEngine()
        engine.ingest(env(0.0, TRACK_SOURCE, track_item(101, (12, 0), t=0.0)))
        center = engine.metas[1].predicted_center(0.1) + np.array([9.5, 0.0])
        step = engine.ingest(env(0.1, TRACK_SOURCE,
                                 track_item(101, center, t=0.1)))[0]
        rec = step.records[0]
        assert rec.action == "created"
        assert rec.meta_label == 2
        assert rec.eta_p == 0.5
        assert set(engine.metas) == {1, 2}

    def test_global_map_refused(self):
        dmap = map_from_dict({"buildings": [], "lanes": []})
        with pytest.raises(MapError):
            FusionEngine(dmap=dmap)
