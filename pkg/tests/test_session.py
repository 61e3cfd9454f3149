import io
import json
import subprocess
import sys

import numpy as np
import pytest

from gazebot import presets
from gazebot.geometry import Pose, Quaternion
from gazebot.hittest import GazeSample
from gazebot.fusion import MarkerObservation
from gazebot.session import (
    FrameRecord,
    LatencyReport,
    StreamError,
    event_log_hash,
    load_runtime_dir,
    measure_latency,
    record,
    record_session,
    replay,
    run_frames_through_pipeline,
    write_runtime_dir,
)
from gazebot.sim import NoiseConfig


def make_frame(t, n_markers=2):
    markers = tuple(
        MarkerObservation(
            i, Pose(np.array([0.01 * i, -0.02, 0.5 + 0.1 * i]), Quaternion.from_axis_angle([0, 0, 1], 0.1 * i)), t
        )
        for i in range(n_markers)
    )
    return FrameRecord(t=t, markers=markers, gaze=GazeSample(u=100.5, v=200.25, t=t, valid=True))


class TestFrameRecords:
    def test_json_round_trip_identity(self):
        frame = make_frame(20.0)
        line = frame.to_json()
        parsed = FrameRecord.from_json(line)
        assert parsed.to_json() == line

    def test_wire_field_names(self):
        d = json.loads(make_frame(20.0).to_json())
        assert set(d) == {"t", "markers", "gaze"}
        assert set(d["markers"][0]) == {"id", "p", "q"}
        assert set(d["gaze"]) == {"u", "v", "valid"}

    def test_record_then_replay_byte_faithful(self):
        frames = [make_frame(20.0 * (k + 1)) for k in range(50)]
        sink = io.StringIO()
        record(sink, frames)
        restored = list(replay(io.StringIO(sink.getvalue())))
        assert [f.to_json() for f in restored] == [f.to_json() for f in frames]

    def test_empty_stream(self):
        assert list(replay(io.StringIO(""))) == []

    def test_corrupt_line_names_line_number(self):
        lines = [make_frame(20.0).to_json(), make_frame(40.0).to_json(), "{broken", ""]
        with pytest.raises(StreamError, match="line 3"):
            list(replay(io.StringIO("\n".join(lines))))

    def test_non_monotone_t_rejected(self):
        lines = [make_frame(40.0).to_json(), make_frame(20.0).to_json()]
        with pytest.raises(StreamError, match="not increasing"):
            list(replay(io.StringIO("\n".join(lines))))


@pytest.fixture(scope="module")
def latency_report() -> LatencyReport:
    return measure_latency(seconds=10.0)


class TestReplayDeterminism:
    def test_replay_matches_live_event_log(self, short_session):
        scene, frames, live_log = short_session
        registry = presets.table_registry()
        profiles = presets.activation_profiles(registry, scene)
        replayed = run_frames_through_pipeline(frames, registry, scene.camera, profiles)
        assert event_log_hash(replayed) == event_log_hash(live_log)
        assert len(live_log) > 0

    def test_serialized_round_trip_same_hash(self, short_session):
        scene, frames, live_log = short_session
        sink = io.StringIO()
        record(sink, frames)
        registry = presets.table_registry()
        profiles = presets.activation_profiles(registry, scene)
        replayed = run_frames_through_pipeline(
            replay(io.StringIO(sink.getvalue())), registry, scene.camera, profiles
        )
        assert event_log_hash(replayed) == event_log_hash(live_log)


class TestRuntimeDir:
    def test_round_trip(self, tmp_path):
        scene = presets.table_scene()
        registry = presets.table_registry()
        profiles = presets.activation_profiles(registry, scene)
        write_runtime_dir(tmp_path / "rt", presets.table_registry_csvs(), scene.camera, profiles)
        reg2, cam2, prof2 = load_runtime_dir(tmp_path / "rt")
        assert reg2.button_ids() == registry.button_ids()
        assert (cam2.fx, cam2.width) == (scene.camera.fx, scene.camera.width)
        assert prof2 == profiles


class TestLatency:
    def test_workload_shape(self, latency_report):
        scene, registry = presets.latency_scene()
        assert len(registry.buttons) == 7
        assert len(scene.markers) == 9
        assert latency_report.frames == 500

    def test_cumulative_ordering(self, latency_report):
        cums = [v for _, v in latency_report.cumulative_means_ms()[:-1]]
        assert all(b >= a for a, b in zip(cums, cums[1:]))

    def test_total_under_budget(self, latency_report):
        assert latency_report.total_mean_ms < 2.0

    def test_table_render(self, latency_report):
        table = latency_report.to_table()
        for stage in ("fuse", "project+hit", "step", "servo", "total"):
            assert stage in table

    def test_hit_test_scaling(self):
        # doubling the button count should not much more than double the
        # project+hit stage cost
        import time

        from gazebot.fusion import fuse_frame
        from gazebot.hittest import gaze_hit, project_zone
        from gazebot.registry import load_registry
        from gazebot.sim import Simulator

        def hit_time(n_buttons: int) -> float:
            markers_csv, buttons_csv, offsets_csv = presets.latency_registry_csvs(
                n_markers=9, n_buttons=n_buttons
            )
            registry = load_registry(markers_csv, buttons_csv, offsets_csv)
            scene, _ = presets.latency_scene()
            sim = Simulator(scene)
            markers = sim.observe_markers()
            fused = fuse_frame(markers, registry)
            gaze = GazeSample(u=960.0, v=540.0, t=0.0)
            t0 = time.perf_counter()
            for _ in range(300):
                zones = [
                    project_zone(f, registry.corners_of(f.button_id), scene.camera)
                    for f in fused
                ]
                for z in zones:
                    gaze_hit(z, gaze)
            return time.perf_counter() - t0

        t7, t14 = hit_time(7), hit_time(14)
        assert t14 <= 4.0 * max(t7, 1e-6)


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    root = tmp_path_factory.mktemp("bundle")
    presets.write_bundle(root)
    return root


class TestCli:
    def run_cli(self, *argv, cwd):
        return subprocess.run(
            [sys.executable, "-m", "gazebot.cli", *argv],
            capture_output=True, text=True, cwd=cwd,
        )

    def test_record_then_replay_round_trip(self, bundle, tmp_path):
        session = tmp_path / "session.jsonl"
        events = tmp_path / "events.jsonl"
        r = self.run_cli(
            "record", "--scene", str(bundle / "scenes/ycb.json"),
            "--out", str(session), "--events", str(events), "--frames", "600",
            cwd=bundle,
        )
        assert r.returncode == 0, r.stderr
        assert session.exists()

        r2 = self.run_cli(
            "replay", "--in", str(session), "--registry", str(bundle / "registry"), cwd=bundle
        )
        assert r2.returncode == 0, r2.stderr
        assert r2.stdout == events.read_text()

    def test_replay_missing_file_exit_1(self, bundle):
        r = self.run_cli("replay", "--in", "nope.jsonl", "--registry", str(bundle / "registry"), cwd=bundle)
        assert r.returncode == 1
        assert "error" in r.stderr

    def test_latency_cli(self, bundle):
        r = self.run_cli("latency", "--seconds", "2", cwd=bundle)
        assert r.returncode == 0, r.stderr
        assert "project+hit" in r.stdout

    def test_bench_cli_json(self, bundle):
        r = self.run_cli(
            "bench", "ycb", "--scene", str(bundle / "scenes/ycb.json"),
            "--seed", "0", "--json", cwd=bundle,
        )
        assert r.returncode == 0, r.stderr
        report = json.loads(r.stdout)
        assert report["total_score"] == 16
        assert len(report["blocks"]) == 8
        assert len(report["pick_durations_s"]) == 8

    def test_noise_override_file(self, bundle, tmp_path):
        from gazebot.cli import _load_scene

        noise = tmp_path / "noise.json"
        noise.write_text(json.dumps({"gaze_sigma": 5.0, "marker_dropout": 0.1}))
        scene = _load_scene(str(bundle / "scenes/ycb.json"), str(noise))
        assert scene.noise.gaze_sigma == 5.0
        assert scene.noise.marker_dropout == 0.1
        assert scene.noise.marker_sigma_t == 0.0  # untouched fields keep scene values

    def test_bench_abort_exits_2(self, bundle, monkeypatch):
        import gazebot.cli as cli
        from gazebot.bench import ProtocolAbort

        def fake_run(*a, **k):
            raise ProtocolAbort("stuck", make_empty_report())

        def make_empty_report():
            from gazebot.bench import BenchReport

            return BenchReport(
                total_score=-16, max_score=16, events=(), pick_durations_s=(),
                drop_durations_s=(), total_time_s=0.0, recalibrations=0,
                estop_count=0, aborted=True, frames=0,
            )

        monkeypatch.setattr("gazebot.bench.run_protocol", fake_run)
        code = cli.main(
            ["bench", "ycb", "--scene", str(bundle / "scenes/ycb.json"), "--table"]
        )
        assert code == 2

    def test_serve_cli_starts_and_answers(self, bundle):
        import socket
        import time
        import urllib.request

        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            port = s.getsockname()[1]
        proc = subprocess.Popen(
            [sys.executable, "-m", "gazebot.cli", "serve",
             "--scene", str(bundle / "scenes/ycb.json"), "--port", str(port)],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, cwd=bundle,
        )
        try:
            deadline = time.monotonic() + 15.0
            last_err = None
            while time.monotonic() < deadline:
                try:
                    with urllib.request.urlopen(
                        f"http://127.0.0.1:{port}/healthz", timeout=1.0
                    ) as resp:
                        assert json.loads(resp.read())["ok"] is True
                        break
                except OSError as e:
                    last_err = e
                    time.sleep(0.2)
            else:
                raise AssertionError(f"server never came up: {last_err}")
        finally:
            proc.terminate()
            proc.wait(timeout=10)
