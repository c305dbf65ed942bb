"""Evaluation of object streams against scripted ground truth.

Works for both levels of the pipeline: per-frame grid objects (label +
box center) and fused meta objects. Matching is per frame, nearest first
within a gate; metrics are per ground-truth object plus stream-level false
positive counts.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .scenario import ScenarioSpec


@dataclass
class ObjectMetrics:
    """Per ground-truth-object accumulators."""

    obj_id: int
    obj_class: str
    frames: int = 0
    detected: int = 0
    exactly_one: int = 0
    sq_err_sum: float = 0.0
    label_switches: int = 0
    _last_label: int | None = field(default=None, repr=False)

    @property
    def detection_rate(self) -> float:
        return self.detected / self.frames if self.frames else 0.0

    @property
    def exactly_one_rate(self) -> float:
        return self.exactly_one / self.frames if self.frames else 0.0

    @property
    def rmse(self) -> float:
        return math.sqrt(self.sq_err_sum / self.detected) if self.detected else 0.0


@dataclass
class FalseObjectMetrics:
    """Per injected-artifact accumulators."""

    obj_id: int
    track_label: int
    frames: int = 0
    frames_with_output: int = 0  # frames where an output sat on the artifact
    accepted_records: int = 0    # created/updated judgements of its label


@dataclass
class EvalReport:
    n_frames: int = 0
    per_object: dict = field(default_factory=dict)
    false_objects: dict = field(default_factory=dict)
    false_positive_frames: int = 0
    false_positives_total: int = 0

    @property
    def false_accepted(self) -> int:
        """Total accepted judgements + output presence on artifacts."""
        return sum(f.accepted_records + f.frames_with_output
                   for f in self.false_objects.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["section", "object_id", "obj_class", "frames",
                         "detected", "detection_rate", "rmse",
                         "label_switches", "exactly_one_rate"])
        for obj_id in sorted(self.per_object):
            m = self.per_object[obj_id]
            writer.writerow(["object", m.obj_id, m.obj_class, m.frames,
                             m.detected, f"{m.detection_rate:.6f}",
                             f"{m.rmse:.6f}", m.label_switches,
                             f"{m.exactly_one_rate:.6f}"])
        for obj_id in sorted(self.false_objects):
            f = self.false_objects[obj_id]
            writer.writerow(["false_object", f.obj_id,
                             f"label={f.track_label}", f.frames,
                             f.frames_with_output, "", "",
                             f.accepted_records, ""])
        writer.writerow(["summary", "", "", self.n_frames, "", "", "",
                         "", ""])
        writer.writerow(["summary_false_accepted", "", "",
                         self.false_accepted, "", "", "", "", ""])
        writer.writerow(["summary_false_positives", "", "",
                         self.false_positives_total,
                         self.false_positive_frames, "", "", "", ""])
        return buf.getvalue()


def evaluate_stream(stream, spec: ScenarioSpec, gate: float = 2.0,
                    truth_filter=None) -> EvalReport:
    """Match an output stream against the scenario's real objects.

    stream: iterable of (timestamp, [(label, center), ...]).
    truth_filter(obj, t) decides which objects count at each frame
    (default: the object is alive). Per frame each output matches at most
    one ground-truth object (nearest within the gate, ground truth in id
    order); leftovers count as false positives. A label switch is a change
    of matched label between two consecutive detections of the same
    ground-truth object.
    """
    if truth_filter is None:
        truth_filter = lambda obj, t: obj.alive(t)
    report = EvalReport()
    truths = sorted(spec.real_objects(), key=lambda o: o.id)
    for o in truths:
        report.per_object[o.id] = ObjectMetrics(obj_id=o.id,
                                                obj_class=o.obj_class)

    for t, outputs in stream:
        report.n_frames += 1
        active = [o for o in truths if truth_filter(o, t)]
        centers = {o.id: o.state_at(t).pos for o in active}
        taken = set()
        matched_count = 0
        for o in active:
            m = report.per_object[o.id]
            m.frames += 1
            truth_c = centers[o.id]
            dists = [(float(np.hypot(*(c - truth_c))), i, label)
                     for i, (label, c) in enumerate(outputs)]
            in_gate = [entry for entry in dists if entry[0] <= gate]
            if len(in_gate) == 1:
                m.exactly_one += 1
            best = None
            for d, i, label in sorted(in_gate):
                if i not in taken:
                    best = (d, i, label)
                    break
            if best is None:
                continue
            d, i, label = best
            taken.add(i)
            matched_count += 1
            m.detected += 1
            m.sq_err_sum += d * d
            if m._last_label is not None and label != m._last_label:
                m.label_switches += 1
            m._last_label = label
        extras = len(outputs) - len(taken)
        if extras > 0:
            report.false_positives_total += extras
            report.false_positive_frames += 1
    return report


def evaluate_false_objects(steps, records, spec: ScenarioSpec,
                           gate: float = 2.0) -> dict:
    """Check injected artifacts: did any output ever sit on one, and were
    any of their samples accepted?

    steps: iterable of objects with .timestamp and .metas (records with a
    bbox). records: iterable of ConfidenceRecord. Returns a dict keyed by
    artifact id.
    """
    fakes = [o for o in spec.objects if not o.is_real]
    out = {o.id: FalseObjectMetrics(obj_id=o.id,
                                    track_label=o.effective_track_label)
           for o in fakes}
    for step in steps:
        for fake in fakes:
            if not fake.alive(step.timestamp):
                continue
            fm = out[fake.id]
            fm.frames += 1
            truth_c = fake.state_at(step.timestamp).pos
            for meta in step.metas:
                center = np.asarray(meta["bbox"], float).mean(axis=0)
                if float(np.hypot(*(center - truth_c))) <= gate:
                    fm.frames_with_output += 1
                    break
    tracked_labels = {o.effective_track_label: o.id
                      for o in fakes if o.seen_by_tracker}
    for rec in records:
        if (rec.source == "track" and rec.action in ("created", "updated")
                and rec.candidate_label in tracked_labels):
            out[tracked_labels[rec.candidate_label]].accepted_records += 1
    return out
