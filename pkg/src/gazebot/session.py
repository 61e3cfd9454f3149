"""Session recording, bit-exact replay and per-stage latency measurement.

Sessions are line-delimited JSON, one frame per line:

    {"t": ms, "markers": [{"id": int, "p": [x,y,z], "q": [w,x,y,z]}],
     "gaze": {"u": px, "v": px, "valid": bool}}

Timestamps are strictly increasing. Replaying a recorded stream through the
pipeline reproduces the live run's event log byte for byte, because both go
through the same frame-processing code path.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from gazebot import presets
from gazebot.bench import FrameTap, pipeline_frame
from gazebot.fusion import MarkerObservation
from gazebot.geometry import CameraIntrinsics, Pose, Quaternion
from gazebot.hittest import GazeSample
from gazebot.inputs import ActivationProfile, InputEvent, InputPipeline
from gazebot.registry import Registry, load_registry_dir
from gazebot.servo import VelocityCommand, compute_velocity
from gazebot.sim import SceneConfig, Simulator


class StreamError(ValueError):
    """Malformed or non-monotone session stream; message names the line."""


@dataclass(frozen=True)
class FrameRecord:
    t: float
    markers: tuple[MarkerObservation, ...]
    gaze: GazeSample

    def to_json(self) -> str:
        return json.dumps(
            {
                "t": self.t,
                "markers": [
                    {
                        "id": m.marker_id,
                        "p": list(m.pose.position),
                        "q": [m.pose.rotation.w, m.pose.rotation.x, m.pose.rotation.y, m.pose.rotation.z],
                    }
                    for m in self.markers
                ],
                "gaze": {"u": self.gaze.u, "v": self.gaze.v, "valid": self.gaze.valid},
            },
            separators=(",", ":"),
        )

    @staticmethod
    def from_json(line: str, lineno: int = 0) -> "FrameRecord":
        try:
            d = json.loads(line)
            t = float(d["t"])
            markers = tuple(
                MarkerObservation(
                    int(m["id"]),
                    Pose(np.array(m["p"], dtype=float), Quaternion(*m["q"])),
                    t,
                )
                for m in d["markers"]
            )
            g = d["gaze"]
            gaze = GazeSample(u=float(g["u"]), v=float(g["v"]), t=t, valid=bool(g["valid"]))
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as e:
            raise StreamError(f"line {lineno}: bad frame record: {e}") from None
        return FrameRecord(t=t, markers=markers, gaze=gaze)


def record(sink, frames: Iterable[FrameRecord]) -> int:
    """Write frames as JSON lines; returns the number written."""
    n = 0
    for frame in frames:
        sink.write(frame.to_json() + "\n")
        n += 1
    return n


def replay(source) -> Iterator[FrameRecord]:
    """Pull-based frame iterator; raises StreamError with the line number."""
    last_t = None
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        frame = FrameRecord.from_json(line, lineno)
        if last_t is not None and frame.t <= last_t:
            raise StreamError(f"line {lineno}: t={frame.t} not increasing (previous {last_t})")
        last_t = frame.t
        yield frame


def event_line(event: InputEvent) -> str:
    return json.dumps(
        {"t": event.t, "button": event.button_id, "edge": event.edge}, separators=(",", ":")
    )


def event_log_hash(lines: list[str]) -> str:
    digest = hashlib.sha256()
    for line in lines:
        digest.update(line.encode())
        digest.update(b"\n")
    return digest.hexdigest()


def run_frames_through_pipeline(
    frames: Iterable[FrameRecord],
    registry: Registry,
    camera: CameraIntrinsics,
    profiles: dict[str, ActivationProfile],
) -> list[str]:
    """Replay a frame stream; returns the event log lines."""
    pipeline = InputPipeline(profiles)
    log: list[str] = []
    for frame in frames:
        _, _, events, _ = pipeline_frame(
            registry, camera, pipeline, list(frame.markers), frame.gaze, frame.t
        )
        log.extend(event_line(e) for e in events)
    return log


def record_session(
    scene: SceneConfig, registry: Registry | None = None, max_frames: int = 3000
) -> tuple[list[FrameRecord], list[str]]:
    """Run the oracle-driven loop and capture (frames, live event log)."""
    from gazebot.bench import ProtocolAbort, run_protocol

    registry = registry or presets.table_registry()
    tap = FrameTap()
    try:
        run_protocol(scene, registry=registry, tap=tap)
        frames_raw = tap.frames
    except ProtocolAbort:
        frames_raw = tap.frames
    frames_raw = frames_raw[:max_frames]
    frames = [FrameRecord(t, tuple(markers), gaze) for t, markers, gaze in frames_raw]
    profiles = presets.activation_profiles(registry, scene)
    live_log = run_frames_through_pipeline(frames, registry, scene.camera, profiles)
    return frames, live_log


# -- runtime directory (registry + camera + profiles) -------------------------


def write_runtime_dir(path: str | Path, registry_csvs, camera: CameraIntrinsics, profiles) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    markers_csv, buttons_csv, offsets_csv = registry_csvs
    (path / "markers.csv").write_text(markers_csv)
    (path / "buttons.csv").write_text(buttons_csv)
    (path / "offsets.csv").write_text(offsets_csv)
    (path / "camera.json").write_text(
        json.dumps(
            {
                "fx": camera.fx, "fy": camera.fy, "cx": camera.cx, "cy": camera.cy,
                "width": camera.width, "height": camera.height,
            },
            indent=2,
        )
        + "\n"
    )
    (path / "profiles.json").write_text(
        json.dumps(
            {
                bid: {"period_ms": p.period_ms, "a_on": p.a_on, "a_off": p.a_off, "kind": p.kind}
                for bid, p in sorted(profiles.items())
            },
            indent=2,
        )
        + "\n"
    )
    return path


def load_runtime_dir(path: str | Path):
    """Load (registry, camera, profiles) for replay from one directory."""
    path = Path(path)
    registry = load_registry_dir(path)
    cam = json.loads((path / "camera.json").read_text())
    camera = CameraIntrinsics(
        fx=cam["fx"], fy=cam["fy"], cx=cam["cx"], cy=cam["cy"],
        width=cam["width"], height=cam["height"],
    )
    profiles_file = path / "profiles.json"
    if profiles_file.exists():
        raw = json.loads(profiles_file.read_text())
        profiles = {
            bid: ActivationProfile(p["period_ms"], p["a_on"], p["a_off"], p["kind"])
            for bid, p in raw.items()
        }
    else:
        profiles = {
            bid: ActivationProfile.discrete() if b.kind == "discrete" else ActivationProfile.continuous()
            for bid, b in registry.buttons.items()
        }
    return registry, camera, profiles


# -- latency instrumentation ---------------------------------------------------

STAGES = ("fuse", "project+hit", "step", "servo")


@dataclass(frozen=True)
class LatencyReport:
    """Wall-clock per-stage timings over a synthetic workload."""

    frames: int
    means_ms: dict[str, float]
    stds_ms: dict[str, float]

    @property
    def total_mean_ms(self) -> float:
        return self.means_ms["total"]

    def cumulative_means_ms(self) -> list[tuple[str, float]]:
        acc = 0.0
        rows = []
        for stage in STAGES:
            acc += self.means_ms[stage]
            rows.append((stage, acc))
        rows.append(("total", self.means_ms["total"]))
        return rows

    def to_table(self) -> str:
        lines = [
            f"Pipeline latency over {self.frames} frames (cumulative)",
            f"{'stage':>12}  {'cumulative mean (ms)':>21}  {'stage mean (ms)':>16}  {'std (ms)':>9}",
        ]
        for stage, cum in self.cumulative_means_ms():
            lines.append(
                f"{stage:>12}  {cum:>21.3f}  {self.means_ms[stage]:>16.3f}"
                f"  {self.stds_ms[stage]:>9.3f}"
            )
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "means_ms": dict(self.means_ms),
            "stds_ms": dict(self.stds_ms),
            "cumulative_ms": {k: v for k, v in self.cumulative_means_ms()},
        }


def measure_latency(seconds: float = 60.0, seed: int = 7) -> LatencyReport:
    """Time the fuse -> project/hit -> step -> servo stages per frame.

    Workload: the synthetic 9-marker / 7-button layout at the 50 Hz frame
    rate, gaze sweeping across the zones. Simulated sensors are generated
    outside the timed sections.
    """
    from gazebot.fusion import fuse_frame
    from gazebot.hittest import gaze_hit, project_zone
    from gazebot.servo import SafetyLatch, apply_cage

    scene, registry = presets.latency_scene(seed=seed)
    sim = Simulator(scene)
    profiles = presets.activation_profiles(registry, scene)
    pipeline = InputPipeline(profiles)
    config = presets.controller_config(scene)
    latch = SafetyLatch(config)
    button_ids = registry.button_ids()

    n_frames = int(seconds * 1000.0 / 20.0)
    samples = {stage: np.zeros(n_frames) for stage in (*STAGES, "total")}
    pos = np.array([0.0, 0.0, 0.16])
    zones = {}

    for k in range(n_frames):
        t = (k + 1) * 20.0
        markers = sim.observe_markers()
        # sweep fixation across buttons, one second each
        target_id = button_ids[(k // 50) % len(button_ids)]
        zone = zones.get(target_id)
        target = zone.centroid if zone is not None and zone.visible else (960.0, 540.0)
        gaze = sim.synth_gaze(target, t)
        sim.step(VelocityCommand(np.zeros(3)), dt=0.02)

        t0 = time.perf_counter()
        fused = fuse_frame(markers, registry)
        t1 = time.perf_counter()
        zones = {
            f.button_id: project_zone(f, registry.corners_of(f.button_id), scene.camera)
            for f in fused
        }
        hits = {bid for bid, z in zones.items() if gaze_hit(z, gaze)}
        t2 = time.perf_counter()
        events = pipeline.step(hits, t)
        snapshot = pipeline.snapshot()
        t3 = time.perf_counter()
        v = compute_velocity(snapshot, registry, config)
        v = apply_cage(pos, v, 0.005, config)
        latch.update(0.0)
        t4 = time.perf_counter()

        samples["fuse"][k] = t1 - t0
        samples["project+hit"][k] = t2 - t1
        samples["step"][k] = t3 - t2
        samples["servo"][k] = t4 - t3
        samples["total"][k] = t4 - t0

    means = {stage: float(vals.mean() * 1000.0) for stage, vals in samples.items()}
    stds = {stage: float(vals.std() * 1000.0) for stage, vals in samples.items()}
    return LatencyReport(frames=n_frames, means_ms=means, stds_ms=stds)
