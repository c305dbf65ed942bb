"""Command-line front end.

The CLI is a thin client of the HTTP service: by default it spins the app
up in-process; with --url it talks to a remote server instead. Artifacts
returned by the service are written to disk verbatim, so byte-identity of
repeated runs is decided server-side.

Exit codes: 0 success, 2 configuration or usage error, 3 scenario error,
4 internal error. Verbosity comes from the GRIDFUSE_LOG environment
variable (DEBUG, INFO, WARNING, ERROR).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

from .config import ConfigError, parse_override

log = logging.getLogger("gridfuse")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SCENARIO = 3
EXIT_INTERNAL = 4

_EPILOG = """\
exit codes:
  0  success
  2  configuration or usage error (bad flags, unresolvable paths, bad
     --override keys or values)
  3  scenario error (unknown scenario name, invalid scenario spec)
  4  internal error (service failure, protocol violation)

environment:
  GRIDFUSE_LOG   logging level for diagnostics (DEBUG, INFO, WARNING,
                 ERROR; default WARNING)
"""

_META_SCALAR_FIELDS = (
    "label", "ref_label", "obj_class", "speed", "heading", "length",
    "width", "confidence", "created_at", "last_update", "grid_hits",
    "track_hits",
)


class CliError(Exception):
    """A failure with a designated exit code and machine-readable payload."""

    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _emit_error(kind: str, message: str):
    sys.stderr.write(
        json.dumps({"error": kind, "message": message}, sort_keys=True)
        + "\n")


class ServiceClient:
    """Minimal JSON client over either a live server or the in-process app."""

    def __init__(self, url: str | None = None):
        if url is None:
            import warnings
            with warnings.catch_warnings():
                # starlette's testclient import warns about a successor
                # httpx package that is not available here
                warnings.simplefilter("ignore", Warning)
                from fastapi.testclient import TestClient
            from .service import create_app
            self._client = TestClient(create_app())
        else:
            import httpx
            self._client = httpx.Client(base_url=url, timeout=600.0)

    def request(self, method: str, path: str, payload: dict | None = None):
        try:
            resp = self._client.request(method, path, json=payload)
        except Exception as exc:
            raise CliError(EXIT_INTERNAL, "internal",
                           f"service request failed: {exc}") from exc
        if resp.status_code >= 400:
            raise CliError(*_classify_http_error(resp))
        return resp.json()


def _classify_http_error(resp) -> tuple[int, str, str]:
    try:
        detail = resp.json().get("detail")
    except Exception:
        detail = None
    if isinstance(detail, dict) and "kind" in detail:
        kind = detail["kind"]
        message = detail.get("message", "")
        code = {"config": EXIT_CONFIG, "scenario": EXIT_SCENARIO,
                "not_found": EXIT_SCENARIO}.get(kind, EXIT_INTERNAL)
        return code, kind, message
    if resp.status_code == 422:
        return EXIT_CONFIG, "config", f"request rejected: {detail}"
    return (EXIT_INTERNAL, "internal",
            f"service returned HTTP {resp.status_code}")


# ---- run --------------------------------------------------------------------


def _resolve_scenario_arg(arg: str) -> dict:
    """Map --scenario to a /runs payload fragment.

    A value that names an existing file, ends in .json, or contains a path
    separator is read as a scenario spec file; anything else is a canned
    scenario name resolved by the service.
    """
    looks_like_path = (os.sep in arg or arg.endswith(".json")
                       or os.path.exists(arg))
    if not looks_like_path:
        return {"scenario": arg}
    if not os.path.isfile(arg):
        raise CliError(EXIT_CONFIG, "config",
                       f"scenario file not found: {arg}")
    try:
        with open(arg) as f:
            spec = json.load(f)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_SCENARIO, "scenario",
                       f"scenario file {arg} is not valid JSON: {exc}")
    return {"spec": spec}


def _parse_overrides(pairs: list[str]) -> dict:
    overrides = {}
    for pair in pairs:
        try:
            section, field_name, value = parse_override(pair)
        except ConfigError as exc:
            raise CliError(EXIT_CONFIG, "config", str(exc))
        overrides[f"{section}.{field_name}"] = value
    return overrides


def _meta_csv_text(rows: list[tuple[float, str, dict]]) -> str:
    """Flatten (timestamp, source, meta record) rows into CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = (["timestamp", "source"] + list(_META_SCALAR_FIELDS)
              + ["ref_pos_x", "ref_pos_y"]
              + [f"bbox_{i}_{ax}" for i in range(4) for ax in ("x", "y")])
    writer.writerow(header)
    for timestamp, source, meta in rows:
        row = [timestamp, source]
        row += [meta[name] for name in _META_SCALAR_FIELDS]
        row += [meta["ref_pos"][0], meta["ref_pos"][1]]
        for corner in meta["bbox"]:
            row += [corner[0], corner[1]]
        writer.writerow(row)
    return buf.getvalue()


def _frames_csv_text(frames_jsonl: str) -> str:
    rows = []
    for line in frames_jsonl.splitlines():
        step = json.loads(line)
        for meta in step["metas"]:
            rows.append((step["timestamp"], step["source"], meta))
    return _meta_csv_text(rows)


def _write_artifacts(out_dir: str, artifacts: dict, fmt: str):
    os.makedirs(out_dir, exist_ok=True)
    if fmt == "csv":
        frames_path = os.path.join(out_dir, "frames.csv")
        with open(frames_path, "w") as f:
            f.write(_frames_csv_text(artifacts["frames_jsonl"]))
    else:
        frames_path = os.path.join(out_dir, "frames.jsonl")
        with open(frames_path, "w") as f:
            f.write(artifacts["frames_jsonl"])
    with open(os.path.join(out_dir, "confidence.jsonl"), "w") as f:
        f.write(artifacts["confidence_jsonl"])
    with open(os.path.join(out_dir, "metrics.csv"), "w") as f:
        f.write(artifacts["metrics_csv"])
    plots_dir = os.path.join(out_dir, "plots")
    os.makedirs(plots_dir, exist_ok=True)
    for name, content in artifacts["plots"].items():
        with open(os.path.join(plots_dir, name), "w") as f:
            f.write(content)
    log.info("artifacts written to %s", out_dir)


def _cmd_run(args) -> int:
    payload = _resolve_scenario_arg(args.scenario)
    payload["overrides"] = _parse_overrides(args.override)
    if args.seed is not None:
        payload["seed"] = args.seed
    if args.frames is not None:
        payload["max_grid_frames"] = args.frames
    client = ServiceClient(args.url)
    result = client.request("POST", "/runs", payload)
    out_dir = args.out or os.path.join("runs", result["scenario"])
    _write_artifacts(out_dir, result["artifacts"], args.format)
    summary = result["summary"]
    print(f"scenario {result['scenario']} seed {result['seed']}: "
          f"{summary['n_grid_frames']} grid frames, "
          f"{summary['n_steps']} fusion steps, "
          f"{summary['n_final_metas']} final objects")
    for obj in summary["objects"]:
        print(f"  object {obj['object_id']}: "
              f"detection {obj['detection_rate']:.3f}, "
              f"rmse {obj['rmse']:.3f} m, "
              f"switches {obj['label_switches']}")
    for fake in summary["false_objects"]:
        print(f"  artifact {fake['object_id']} (track {fake['track_label']}):"
              f" accepted {fake['accepted_records']} of {fake['frames']}"
              " frames")
    print(f"  false positives: {summary['false_positives_total']}")
    print(f"  artifacts: {out_dir}")
    return EXIT_OK


# ---- inspect ----------------------------------------------------------------


def _load_frame_log(path: str) -> list[dict]:
    if not os.path.isfile(path):
        raise CliError(EXIT_CONFIG, "config",
                       f"frame log not found: {path}")
    steps = []
    with open(path) as f:
        for k, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            try:
                steps.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CliError(EXIT_INTERNAL, "internal",
                               f"{path}:{k + 1} is not valid JSON: {exc}")
    return steps


def _sibling_confidence_records(frame_log_path: str) -> list[dict]:
    path = os.path.join(os.path.dirname(os.path.abspath(frame_log_path)),
                        "confidence.jsonl")
    if not os.path.isfile(path):
        return []
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def _cmd_inspect(args) -> int:
    steps = _load_frame_log(args.log)
    if not 0 <= args.frame < len(steps):
        raise CliError(EXIT_CONFIG, "config",
                       f"frame index {args.frame} out of range "
                       f"(log has {len(steps)} frames)")
    step = steps[args.frame]
    if args.format == "csv":
        rows = [(step["timestamp"], step["source"], meta)
                for meta in step["metas"]]
        sys.stdout.write(_meta_csv_text(rows))
        return EXIT_OK
    metas = step["metas"]
    print(f"frame {args.frame}: t={step['timestamp']:.3f} "
          f"source={step['source']} {len(metas)} objects")
    for meta in metas:
        center_x = sum(c[0] for c in meta["bbox"]) / 4.0
        center_y = sum(c[1] for c in meta["bbox"]) / 4.0
        print(f"  meta {meta['label']} [{meta['obj_class']}] "
              f"center=({center_x:.2f}, {center_y:.2f}) "
              f"speed={meta['speed']:.2f} heading={meta['heading']:.3f} "
              f"size={meta['length']:.2f}x{meta['width']:.2f} "
              f"confidence={meta['confidence']:.4f}")
    records = [r for r in _sibling_confidence_records(args.log)
               if abs(r["timestamp"] - step["timestamp"]) <= 1e-9
               and r["source"] == step["source"]]
    for rec in records:
        target = ("meta " + str(rec["meta_label"])
                  if rec["meta_label"] is not None else "no meta")
        line = (f"  candidate {rec['candidate_label']} -> {target}: "
                f"action={rec['action']} "
                f"physical={rec['eta_p']:.4f} module={rec['eta_e']:.4f} "
                f"map={rec['eta_m']:.4f} confidence={rec['eta']:.4f}")
        if rec.get("reason"):
            line += f" reason={rec['reason']}"
        print(line)
    return EXIT_OK


# ---- scenarios / serve ------------------------------------------------------


def _cmd_scenarios(args) -> int:
    if args.dump is not None:
        from .scenario import ScenarioError, canned_scenario
        try:
            spec = canned_scenario(args.dump)
        except ScenarioError as exc:
            raise CliError(EXIT_SCENARIO, "scenario", str(exc))
        json.dump(spec.to_dict(), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    client = ServiceClient(args.url)
    result = client.request("GET", "/scenarios")
    for info in result["scenarios"]:
        print(f"{info['name']}: {info['duration']:.1f} s, "
              f"seed {info['seed']}, {info['n_objects']} objects, "
              f"{info['n_obstacles']} obstacles")
        print(f"    {info['description']}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn
    uvicorn.run("gridfuse.service.app:app", host=args.host, port=args.port,
                log_level=(os.environ.get("GRIDFUSE_LOG") or "info").lower())
    return EXIT_OK


# ---- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridfuse",
        description="Grid-object extraction, fusion and confidence "
                    "validation over simulated scenes.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser(
        "run", help="run a scenario through the full pipeline",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    p_run.add_argument("--scenario", required=True,
                       help="canned scenario name or path to a scenario "
                            "spec JSON file")
    p_run.add_argument("--out", default=None,
                       help="output directory (default: runs/<scenario>)")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.add_argument("--override", action="append", default=[],
                       metavar="KEY=VAL",
                       help="config override, e.g. fusion.eta_min=0.2 "
                            "(repeatable)")
    p_run.add_argument("--frames", type=int, default=None, metavar="N",
                       help="truncate the run after N grid frames")
    p_run.add_argument("--format", choices=("jsonl", "csv"),
                       default="jsonl",
                       help="frame log format (default jsonl)")
    p_run.add_argument("--url", default=None,
                       help="remote service URL (default: in-process)")
    p_run.set_defaults(func=_cmd_run)

    p_inspect = sub.add_parser(
        "inspect", help="dump one frame of a frame log")
    p_inspect.add_argument("log", help="path to frames.jsonl")
    p_inspect.add_argument("--frame", type=int, required=True,
                           help="frame index to dump")
    p_inspect.add_argument("--format", choices=("text", "csv"),
                           default="text")
    p_inspect.set_defaults(func=_cmd_inspect)

    p_list = sub.add_parser("scenarios", help="list canned scenarios")
    p_list.add_argument("--url", default=None,
                        help="remote service URL (default: in-process)")
    p_list.add_argument("--dump", default=None, metavar="NAME",
                        help="print the named scenario spec as JSON instead")
    p_list.set_defaults(func=_cmd_scenarios)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    level = (os.environ.get("GRIDFUSE_LOG") or "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _emit_error(exc.kind, str(exc))
        return exc.code
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive catch-all
        log.exception("unhandled failure")
        _emit_error("internal", f"{type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
