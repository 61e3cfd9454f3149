"""
Deterministic session recording and replay
==========================================

Sessions are line-delimited JSON frames (marker observations + gaze).
Feeding a recorded stream back through the pipeline reproduces the live
event log byte for byte, which makes field sessions debuggable offline.
"""

import io

from gazebot import NoiseConfig, presets
from gazebot.session import (
    event_log_hash,
    record,
    record_session,
    replay,
    run_frames_through_pipeline,
)

############################################################
# Record 600 frames (12 s) of an oracle-driven session with sensor noise

scene = presets.table_scene(seed=5, noise=NoiseConfig(gaze_sigma=3.0, marker_sigma_t=0.001))
frames, live_log = record_session(scene, max_frames=600)
print(f"recorded {len(frames)} frames, {len(live_log)} input events live")

buffer = io.StringIO()
record(buffer, frames)
print(f"session size: {len(buffer.getvalue())/1024:.0f} KiB")
print("first frame:", buffer.getvalue().splitlines()[0][:96], "...")

############################################################
# Replay from the serialized bytes and compare event logs

registry = presets.table_registry()
profiles = presets.activation_profiles(registry, scene)
replayed = run_frames_through_pipeline(
    replay(io.StringIO(buffer.getvalue())), registry, scene.camera, profiles
)

print(f"live   sha256 {event_log_hash(live_log)}")
print(f"replay sha256 {event_log_hash(replayed)}")
assert event_log_hash(replayed) == event_log_hash(live_log)
print("byte-identical event logs")
