"""HTTP service exposing scenario runs and live fusion sessions.

Stateless endpoints (/scenarios, /runs) wrap the batch pipeline; the
/sessions endpoints keep a fusion engine alive per client so grid frames
and track envelopes can be streamed in.
"""
from __future__ import annotations

import dataclasses
import math
import threading
import time
import uuid

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import ConfigError, apply_overrides, default_configs
from ..digital_map import (EGO_FRAME, GLOBAL_FRAME, MapError, map_from_dict,
                           map_to_ego)
from ..dogma import DogmaFrame
from ..ego import EgoState, FrameAnchor, GlobalEgoState
from ..extraction import GridExtractor
from ..fusion import FusionEngine, OutOfOrderError, SampleEnvelope
from ..pipeline import RunConfig, run_scenario
from ..scenario import ScenarioError, ScenarioSpec, canned_scenario, scenario_names
from . import schemas as sc


def _fail(status: int, kind: str, message: str):
    raise HTTPException(status_code=status,
                        detail={"kind": kind, "message": message})


def _watermark(engine: FusionEngine) -> float | None:
    return None if math.isinf(engine.watermark) else engine.watermark


class _Session:
    """One live fusion pipeline plus its extractor and bookkeeping."""

    def __init__(self, engine: FusionEngine, extractor: GridExtractor):
        self.engine = engine
        self.extractor = extractor
        self.created_at = time.time()
        self.n_records = 0
        self.lock = threading.Lock()


def _step_models(steps) -> list[sc.FusionStepModel]:
    return [
        sc.FusionStepModel(
            timestamp=step.timestamp, source=step.source,
            records=[sc.ConfidenceRecordModel(**r.to_record())
                     for r in step.records],
            metas=[sc.MetaObjectModel(**m) for m in step.metas])
        for step in steps
    ]


def _summarize(result) -> sc.RunSummary:
    rep = result.report
    objects = [
        sc.ObjectMetricsModel(
            object_id=oid, frames=m.frames, detected=m.detected,
            detection_rate=m.detection_rate,
            exactly_one_rate=m.exactly_one_rate,
            rmse=m.rmse, label_switches=m.label_switches)
        for oid, m in sorted(rep.per_object.items())
    ]
    false_objects = [
        sc.FalseObjectModel(
            object_id=oid, track_label=f.track_label, frames=f.frames,
            frames_with_output=f.frames_with_output,
            accepted_records=f.accepted_records)
        for oid, f in sorted(rep.false_objects.items())
    ]
    return sc.RunSummary(
        n_steps=len(result.steps),
        n_grid_frames=len(result.grid_steps),
        n_records=len(result.records),
        n_final_metas=len(result.final_metas),
        objects=objects, false_objects=false_objects,
        false_positive_frames=rep.false_positive_frames,
        false_positives_total=rep.false_positives_total)


def _scenario_info(name: str) -> sc.ScenarioInfo:
    spec = canned_scenario(name)
    return sc.ScenarioInfo(
        name=spec.name, description=spec.description,
        duration=spec.duration, seed=spec.seed,
        n_objects=len(spec.objects), n_obstacles=len(spec.obstacles),
        has_map=spec.map_data is not None)


def create_app() -> FastAPI:
    app = FastAPI(title="gridfuse", version=__version__)
    sessions: dict[str, _Session] = {}
    sessions_lock = threading.Lock()

    def _get_session(session_id: str) -> _Session:
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            _fail(404, "not_found", f"no session {session_id!r}")
        return session

    @app.get("/health", response_model=sc.HealthResponse)
    def health():
        return sc.HealthResponse(status="ok", version=__version__)

    @app.get("/scenarios", response_model=sc.ScenarioListResponse)
    def list_scenarios():
        return sc.ScenarioListResponse(
            scenarios=[_scenario_info(n) for n in scenario_names()])

    @app.post("/runs", response_model=sc.RunResponse)
    def run(req: sc.RunRequest):
        if req.scenario is not None:
            try:
                spec = canned_scenario(req.scenario, seed=req.seed)
            except ScenarioError as exc:
                _fail(404, "scenario", str(exc))
        else:
            try:
                spec = ScenarioSpec.from_dict(req.spec)
                if req.seed is not None:
                    spec = dataclasses.replace(spec, seed=int(req.seed))
                spec.validate()
            except (ScenarioError, MapError, KeyError, TypeError,
                    ValueError) as exc:
                _fail(400, "scenario", f"invalid scenario spec: {exc}")
        try:
            cfgs = apply_overrides(default_configs(), dict(req.overrides))
        except ConfigError as exc:
            _fail(400, "config", str(exc))
        try:
            result = run_scenario(RunConfig(
                scenario=spec,
                extraction=cfgs["extraction"],
                fusion=cfgs["fusion"],
                map_build=cfgs["map_build"],
                max_grid_frames=req.max_grid_frames,
                eval_gate=req.eval_gate))
        except (ScenarioError, MapError) as exc:
            _fail(400, "scenario", str(exc))
        return sc.RunResponse(
            scenario=spec.name, seed=spec.seed,
            summary=_summarize(result),
            artifacts=sc.RunArtifacts(
                frames_jsonl=result.frames_jsonl,
                confidence_jsonl=result.confidence_jsonl,
                metrics_csv=result.metrics_csv,
                plots=result.plots))

    @app.post("/sessions", response_model=sc.SessionInfo, status_code=201)
    def create_session(req: sc.SessionCreateRequest):
        try:
            cfgs = apply_overrides(default_configs(), dict(req.overrides))
        except ConfigError as exc:
            _fail(400, "config", str(exc))
        dmap = None
        if req.map is not None:
            try:
                if req.map_frame == "ego":
                    dmap = map_from_dict(req.map, cfgs["map_build"],
                                         frame=EGO_FRAME)
                else:
                    if req.anchor is None:
                        _fail(400, "config",
                              "a global-frame map needs an anchor "
                              "(east, north, heading)")
                    anchor = FrameAnchor(
                        global_pose=GlobalEgoState(
                            east=float(req.anchor["east"]),
                            north=float(req.anchor["north"]),
                            heading=float(req.anchor["heading"]),
                            timestamp=0.0),
                        ego_pose=EgoState())
                    gmap = map_from_dict(req.map, cfgs["map_build"],
                                         frame=GLOBAL_FRAME)
                    dmap = map_to_ego(gmap, anchor)
            except (MapError, KeyError, TypeError, ValueError) as exc:
                _fail(400, "config", f"invalid map: {exc}")
        session = _Session(
            engine=FusionEngine(cfgs["fusion"], dmap),
            extractor=GridExtractor(cfgs["extraction"]))
        session_id = uuid.uuid4().hex
        with sessions_lock:
            sessions[session_id] = session
        return sc.SessionInfo(
            session_id=session_id, created_at=session.created_at,
            watermark=_watermark(session.engine), n_metas=0, n_records=0)

    @app.get("/sessions/{session_id}", response_model=sc.SessionInfo)
    def session_info(session_id: str):
        session = _get_session(session_id)
        with session.lock:
            return sc.SessionInfo(
                session_id=session_id, created_at=session.created_at,
                watermark=_watermark(session.engine),
                n_metas=len(session.engine.metas),
                n_records=session.n_records)

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        with sessions_lock:
            if sessions.pop(session_id, None) is None:
                _fail(404, "not_found", f"no session {session_id!r}")

    @app.post("/sessions/{session_id}/envelopes",
              response_model=sc.IngestResponse)
    def ingest_envelope(session_id: str, req: sc.EnvelopeRequest):
        session = _get_session(session_id)
        try:
            envelope = SampleEnvelope.from_record({
                "timestamp": req.timestamp,
                "source": req.source,
                "items": [item.model_dump() for item in req.items]})
        except (ValueError, KeyError) as exc:
            _fail(400, "ingest", f"bad envelope: {exc}")
        with session.lock:
            try:
                steps = session.engine.ingest(envelope)
            except OutOfOrderError as exc:
                _fail(409, "ingest", str(exc))
            session.n_records += sum(len(s.records) for s in steps)
            return sc.IngestResponse(
                steps=_step_models(steps),
                watermark=_watermark(session.engine))

    @app.post("/sessions/{session_id}/frames",
              response_model=sc.FrameResponse)
    def ingest_frame(session_id: str, req: sc.FrameRequest):
        session = _get_session(session_id)
        try:
            frame = DogmaFrame.from_record(req.frame)
        except (ValueError, KeyError, TypeError) as exc:
            _fail(400, "ingest", f"bad grid frame: {exc}")
        with session.lock:
            objects = session.extractor.extract(frame)
            steps = []
            if req.fuse:
                envelope = SampleEnvelope(
                    timestamp=frame.timestamp, source="grid", items=objects)
                try:
                    steps = session.engine.ingest(envelope)
                except OutOfOrderError as exc:
                    _fail(409, "ingest", str(exc))
                session.n_records += sum(len(s.records) for s in steps)
            return sc.FrameResponse(
                objects=[sc.GridObjectModel(**o.to_record())
                         for o in objects],
                steps=_step_models(steps),
                watermark=_watermark(session.engine))

    @app.get("/sessions/{session_id}/objects",
             response_model=sc.ObjectsResponse)
    def session_objects(session_id: str):
        session = _get_session(session_id)
        with session.lock:
            return sc.ObjectsResponse(
                watermark=_watermark(session.engine),
                metas=[sc.MetaObjectModel(**m.to_record())
                       for m in session.engine.metas.values()])

    return app


app = create_app()
