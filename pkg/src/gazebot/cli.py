"""Command-line entry points.

    gazebot bench ycb --scene scenes/ycb.json --seed 3 [--noise noise.json] [--json|--table]
    gazebot record --scene scenes/ycb.json --policy oracle --out session.jsonl
    gazebot replay --in session.jsonl --registry data/registry
    gazebot latency --scene scenes/ycb.json --seconds 60
    gazebot serve --scene scenes/ycb.json --port 8765

Exit codes: 0 success, 1 validation error, 2 runtime fault.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _load_scene(path: str, noise_path: str | None = None):
    from gazebot.sim import NoiseConfig, SceneConfig

    scene = SceneConfig.load(path)
    if noise_path:
        overrides = json.loads(Path(noise_path).read_text())
        merged = {**scene.to_dict()["noise"], **overrides}
        scene = replace(
            scene,
            noise=NoiseConfig(
                marker_sigma_t=merged["marker_sigma_t"],
                marker_sigma_r=merged["marker_sigma_r"],
                marker_dropout=merged["marker_dropout"],
                gaze_sigma=merged["gaze_sigma"],
                gaze_drift_rate=merged["gaze_drift_rate"],
                visibility_cone=merged["visibility_cone"],
                blinks=tuple(tuple(b) for b in merged.get("blinks", [])),
            ),
        )
    return scene


def _registry_for(scene):
    from gazebot import presets
    from gazebot.registry import load_registry_dir

    if scene.registry_dir is None:
        return presets.table_registry()
    return load_registry_dir(scene.registry_dir)


def cmd_bench(args) -> int:
    from gazebot.bench import ProtocolAbort, run_protocol

    scene = _load_scene(args.scene, args.noise)
    try:
        report = run_protocol(scene, registry=_registry_for(scene), seed=args.seed)
    except ProtocolAbort as abort:
        print(abort.report.to_json() if args.json else abort.report.to_table())
        print(f"aborted: {abort}", file=sys.stderr)
        return EXIT_RUNTIME
    print(report.to_json() if args.json else report.to_table())
    return EXIT_OK


def cmd_record(args) -> int:
    from gazebot.session import event_line, record, record_session

    scene = _load_scene(args.scene)
    frames, live_log = record_session(scene, registry=_registry_for(scene), max_frames=args.frames)
    with open(args.out, "w") as sink:
        n = record(sink, frames)
    if args.events:
        Path(args.events).write_text("".join(line + "\n" for line in live_log))
    print(f"recorded {n} frames to {args.out} ({len(live_log)} events)", file=sys.stderr)
    return EXIT_OK


def cmd_replay(args) -> int:
    from gazebot.session import load_runtime_dir, replay, run_frames_through_pipeline

    registry, camera, profiles = load_runtime_dir(args.registry)
    with open(getattr(args, "in"), "r") as source:
        log = run_frames_through_pipeline(replay(source), registry, camera, profiles)
    for line in log:
        print(line)
    return EXIT_OK


def cmd_latency(args) -> int:
    from gazebot.session import measure_latency

    report = measure_latency(seconds=args.seconds)
    print(report.to_table())
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from gazebot.service import build_app

    scene = _load_scene(args.scene)
    app = build_app(scene, _registry_for(scene))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazebot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run a scored benchmark")
    bench_sub = bench.add_subparsers(dest="benchmark", required=True)
    ycb = bench_sub.add_parser("ycb", help="block pick-and-place protocol")
    ycb.add_argument("--scene", required=True)
    ycb.add_argument("--seed", type=int, default=None)
    ycb.add_argument("--noise", default=None, help="JSON file overriding noise fields")
    fmt = ycb.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--table", action="store_true")
    ycb.set_defaults(func=cmd_bench)

    rec = sub.add_parser("record", help="record an oracle session to JSONL")
    rec.add_argument("--scene", required=True)
    rec.add_argument("--policy", choices=["oracle"], default="oracle")
    rec.add_argument("--out", required=True)
    rec.add_argument("--events", default=None, help="also write the live event log")
    rec.add_argument("--frames", type=int, default=3000)
    rec.set_defaults(func=cmd_record)

    rep = sub.add_parser("replay", help="replay a session; event log to stdout")
    rep.add_argument("--in", required=True)
    rep.add_argument("--registry", required=True)
    rep.set_defaults(func=cmd_replay)

    lat = sub.add_parser("latency", help="measure per-stage pipeline latency")
    lat.add_argument("--scene", default=None, help="unused; workload is synthetic")
    lat.add_argument("--seconds", type=float, default=60.0)
    lat.set_defaults(func=cmd_latency)

    srv = sub.add_parser("serve", help="host a live session over WebSocket")
    srv.add_argument("--scene", required=True)
    srv.add_argument("--port", type=int, default=8765)
    srv.add_argument("--host", default="127.0.0.1")
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except RuntimeError as e:
        print(f"fault: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
