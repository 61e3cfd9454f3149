"""Soft-real-time session host with a WebSocket operator endpoint.

One background thread owns the simulator and pipeline and advances them with
a fixed timestep: exactly 20 ms of simulated time per input frame and 5 ms
per servo tick, paced against the wall clock while serving. Network handlers
never touch that state directly; they exchange immutable snapshots and
queued commands with the loop thread.

Protocol (text frames, one JSON message each, version field ``v: 1``):

* client -> server ``{"v":1,"type":"gaze","gaze":{"u":..,"v":..,"valid":..}}``
* client -> server ``{"v":1,"type":"control","cmd":"reset|pause|resume|estop_clear|recalibrate"}``
* server -> client ``hello`` (static scene facts + assigned role),
  ``state`` (50 Hz world summary with a strictly increasing frame counter),
  ``event`` (input edges, scoring, e-stop transitions) and ``error``.

The first client to connect controls the gaze; later ones observe. A slow
observer only ever loses ``state`` frames (latest-value delivery); the sim
loop never blocks on a client.
"""

from __future__ import annotations

import json
import threading
import time
from contextlib import asynccontextmanager

import anyio
import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from gazebot.bench import BenchRunner, score_block
from gazebot.geometry import BehindCameraError, invert, project_point
from gazebot.hittest import GazeSample
from gazebot.registry import Registry
from gazebot.sim import INPUT_DT_MS, SceneConfig

PROTOCOL_VERSION = 1
GAZE_STALE_FRAMES = 10  # 200 ms at 50 Hz
CONTROL_COMMANDS = ("reset", "pause", "resume", "estop_clear", "recalibrate")
MAX_QUEUED_EVENTS = 1000


class Subscription:
    """Latest-value state register plus a bounded event queue per client."""

    def __init__(self, host: "SessionHost"):
        self._host = host
        self._cond = threading.Condition()
        self._seq = 0
        self._state: dict | None = None
        self._events: list[dict] = []
        self.closed = False

    def publish(self, seq: int, state: dict, events: list[dict]) -> None:
        with self._cond:
            self._seq = seq
            self._state = state  # older unsent state is simply replaced
            self._events.extend(events)
            if len(self._events) > MAX_QUEUED_EVENTS:
                self._events = self._events[-MAX_QUEUED_EVENTS:]
            self._cond.notify_all()

    def wait_next(self, last_seq: int, timeout: float = 0.25):
        """Block until a newer state or pending events; (seq, state, events)."""
        with self._cond:
            if self._seq <= last_seq and not self._events:
                self._cond.wait(timeout)
            events, self._events = self._events, []
            if self._seq > last_seq:
                return self._seq, self._state, events
            return last_seq, None, events


class SessionHost:
    """Owns the frame loop; stepped by one thread, observed by many."""

    def __init__(self, scene: SceneConfig, registry: Registry, realtime: bool = True):
        self.scene = scene
        self.registry = registry
        self.realtime = realtime
        self._lock = threading.Lock()
        self._subs: list[Subscription] = []
        self._controller_id: int | None = None
        self._next_client = 0
        self._gaze: tuple[float, float, bool] | None = None
        self._gaze_frame = -(10**9)
        self._commands: list[str] = []
        self._paused = False
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._seq = 0
        self._frame_idx = 0
        self._reset_world()

    def _reset_world(self) -> None:
        self.runner = BenchRunner(self.scene, self.registry)
        self._available = set(range(len(self.scene.stencil.squares)))
        self._prev_held = None
        self._prev_estop = False

    # -- client side (called from network workers) ---------------------------

    def subscribe(self) -> tuple[int, Subscription, str]:
        with self._lock:
            client_id = self._next_client
            self._next_client += 1
            sub = Subscription(self)
            self._subs.append(sub)
            role = "observer"
            if self._controller_id is None:
                self._controller_id = client_id
                role = "controller"
            return client_id, sub, role

    def unsubscribe(self, client_id: int, sub: Subscription) -> None:
        with self._lock:
            sub.closed = True
            if sub in self._subs:
                self._subs.remove(sub)
            if self._controller_id == client_id:
                self._controller_id = None

    def submit_gaze(self, client_id: int, u: float, v: float, valid: bool) -> bool:
        """Apply a gaze sample; returns False for read-only clients."""
        with self._lock:
            if self._controller_id is None:
                self._controller_id = client_id
            if client_id != self._controller_id:
                return False
            self._gaze = (float(u), float(v), bool(valid))
            self._gaze_frame = self._frame_idx
            return True

    def submit_control(self, cmd: str) -> bool:
        if cmd not in CONTROL_COMMANDS:
            return False
        with self._lock:
            self._commands.append(cmd)
        return True

    def hello(self, role: str) -> dict:
        stencil = self.scene.stencil
        return {
            "v": PROTOCOL_VERSION,
            "type": "hello",
            "role": role,
            "scene": {
                "image": [self.scene.camera.width, self.scene.camera.height],
                "stencil": {
                    "sheet_center": stencil.sheet_center.tolist(),
                    "sheet_size": stencil.sheet_size.tolist(),
                    "square_edge": stencil.square_edge,
                    "squares": stencil.squares.tolist(),
                },
                "cube_edge": self.scene.cube_edge,
                "buttons": self.registry.button_ids(),
                "max_score": 2 * len(self.scene.cube_positions),
            },
        }

    # -- loop side ----------------------------------------------------------------

    def start(self) -> None:
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, name="session-loop", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)

    def _run(self) -> None:
        period = INPUT_DT_MS / 1000.0
        deadline = time.monotonic()
        while not self._stop.is_set():
            if self.realtime:
                deadline += period
                delay = deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                else:
                    deadline = time.monotonic()  # fell behind; do not bank time
            self.step_frame()

    def step_frame(self) -> None:
        """One 20 ms frame: commands, gaze hold-last-sample, sim advance."""
        with self._lock:
            commands, self._commands = self._commands, []
            gaze = self._gaze
            stale = self._frame_idx - self._gaze_frame >= GAZE_STALE_FRAMES
            self._frame_idx += 1

        for cmd in commands:
            if cmd == "reset":
                self._reset_world()
            elif cmd == "pause":
                self._paused = True
            elif cmd == "resume":
                self._paused = False
            elif cmd == "estop_clear":
                self.runner.controller.clear_estop()
            elif cmd == "recalibrate":
                self.runner.sim.recalibrate()

        events: list[dict] = []
        if not self._paused:
            t_next = self.runner.sim.state.t + INPUT_DT_MS
            if gaze is None or stale:
                sample = GazeSample(u=0.0, v=0.0, t=t_next, valid=False)
            else:
                sample = GazeSample(u=gaze[0], v=gaze[1], t=t_next, valid=gaze[2])
            view = self.runner.run_frame(gaze=sample)
            events.extend(
                {
                    "v": PROTOCOL_VERSION,
                    "type": "event",
                    "kind": "input",
                    "button": e.button_id,
                    "edge": e.edge,
                    "t": e.t,
                }
                for e in view.events
            )
            events.extend(self._score_drops(view))
            if view.state.estop != self._prev_estop:
                events.append(
                    {
                        "v": PROTOCOL_VERSION,
                        "type": "event",
                        "kind": "estop",
                        "engaged": view.state.estop,
                        "t": view.state.t,
                    }
                )
                self._prev_estop = view.state.estop

        state_msg = self._state_message()
        with self._lock:
            self._seq += 1
            seq = self._seq
            subs = list(self._subs)
        for sub in subs:
            sub.publish(seq, state_msg, events)

    def _score_drops(self, view) -> list[dict]:
        out = []
        held = view.state.held_cube
        if self._prev_held is not None and held is None:
            block = self._prev_held
            points, consumed = score_block(
                view.state.cube_poses[block].position[:2],
                self.scene.stencil,
                cube_edge=self.scene.cube_edge,
                available=self._available,
            )
            if consumed is not None:
                self._available.discard(consumed)
            self.runner.sim.add_score(points)
            out.append(
                {
                    "v": PROTOCOL_VERSION,
                    "type": "event",
                    "kind": "score",
                    "block": block,
                    "points": points,
                    "square": consumed,
                    "total": self.runner.sim.state.score,
                    "t": view.state.t,
                }
            )
        self._prev_held = held
        return out

    def _state_message(self) -> dict:
        state = self.runner.sim.state
        view = self.runner.view
        zones = []
        snapshot = None
        velocity = [0.0, 0.0, 0.0]
        gaze_echo = None
        if view is not None:
            snapshot = view.snapshot
            from gazebot.servo import compute_velocity

            if not state.estop:
                velocity = compute_velocity(
                    snapshot, self.registry, self.runner.controller.config
                ).tolist()
            for bid, zone in sorted(view.zones.items()):
                zones.append(
                    {
                        "id": bid,
                        "quad": np.asarray(zone.quad).tolist(),
                        "visible": zone.visible,
                        "a": snapshot.activation_of(bid),
                        "active": snapshot.status_of(bid) == "active",
                    }
                )
        with self._lock:
            gaze = self._gaze
            stale = self._frame_idx - 1 - self._gaze_frame >= GAZE_STALE_FRAMES
        if gaze is not None:
            gaze_echo = {"u": gaze[0], "v": gaze[1], "valid": gaze[2] and not stale}
        decor = self._decor_px(state)
        return {
            "v": PROTOCOL_VERSION,
            "type": "state",
            "frame": self._seq + 1,
            "t": state.t,
            "paused": self._paused,
            "ee": state.ee_pose.position.tolist(),
            "gripper": state.gripper,
            "held": state.held_cube,
            "cubes": [c.position.tolist() for c in state.cube_poses],
            "force": state.contact_force,
            "estop": state.estop,
            "score": state.score,
            "recalibrations": state.recalibrations,
            "velocity": velocity,
            "zones": zones,
            "gaze": gaze_echo,
            **decor,
        }

    def _decor_px(self, state) -> dict:
        """Camera-frame projections of the table decor, so clients render
        the scene with no projection math of their own."""
        sim = self.runner.sim
        cam_from_world = invert(sim.head_pose_at(state.t))
        k = self.scene.camera

        def px(point) -> list | None:
            try:
                return project_point(k, cam_from_world.apply(point)).tolist()
            except BehindCameraError:
                return None

        def footprint(cx: float, cy: float, half: float, z: float) -> list | None:
            corners = [
                px([cx - half, cy - half, z]),
                px([cx + half, cy - half, z]),
                px([cx + half, cy + half, z]),
                px([cx - half, cy + half, z]),
            ]
            return None if any(c is None for c in corners) else corners

        stencil = self.scene.stencil
        z = self.scene.table_height
        lo, hi = stencil.sheet_min, stencil.sheet_max
        sheet = [px([lo[0], lo[1], z]), px([hi[0], lo[1], z]), px([hi[0], hi[1], z]), px([lo[0], hi[1], z])]
        return {
            "ee_px": px(state.ee_pose.position),
            "sheet_px": None if any(c is None for c in sheet) else sheet,
            "squares_px": [
                footprint(sx, sy, stencil.square_edge / 2, z) for sx, sy in stencil.squares
            ],
            "cubes_px": [
                footprint(
                    c.position[0], c.position[1], self.scene.cube_edge / 2, c.position[2]
                )
                for c in state.cube_poses
            ],
        }


def _error(message: str) -> dict:
    return {"v": PROTOCOL_VERSION, "type": "error", "message": message}


def build_app(scene: SceneConfig, registry: Registry, realtime: bool = True) -> FastAPI:
    host = SessionHost(scene, registry, realtime=realtime)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        host.start()
        try:
            yield
        finally:
            host.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.host = host

    @app.websocket("/session")
    async def session_endpoint(ws: WebSocket):
        await ws.accept()
        client_id, sub, role = host.subscribe()
        await ws.send_json(host.hello(role))
        send_lock = anyio.Lock()

        async def pump_outgoing():
            last_seq = 0
            while not sub.closed:
                seq, state, events = await anyio.to_thread.run_sync(sub.wait_next, last_seq)
                try:
                    async with send_lock:
                        for event in events:
                            await ws.send_text(json.dumps(event, separators=(",", ":")))
                        if state is not None and seq > last_seq:
                            await ws.send_text(json.dumps(state, separators=(",", ":")))
                except (WebSocketDisconnect, RuntimeError):
                    return
                last_seq = seq

        async def pump_incoming():
            while True:
                try:
                    raw = await ws.receive_text()
                except WebSocketDisconnect:
                    return
                reply = None
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    reply = _error("not JSON")
                    msg = None
                if msg is not None:
                    kind = msg.get("type")
                    if kind == "gaze":
                        g = msg.get("gaze", {})
                        try:
                            applied = host.submit_gaze(
                                client_id, g["u"], g["v"], bool(g.get("valid", True))
                            )
                        except (KeyError, TypeError, ValueError):
                            reply = _error("bad gaze payload")
                        else:
                            if not applied:
                                reply = _error("read-only client")
                    elif kind == "control":
                        if not host.submit_control(msg.get("cmd", "")):
                            reply = _error(f"unknown control {msg.get('cmd')!r}")
                    else:
                        reply = _error(f"unknown type {kind!r}")
                if reply is not None:
                    async with send_lock:
                        await ws.send_text(json.dumps(reply, separators=(",", ":")))

        try:
            async with anyio.create_task_group() as tg:
                tg.start_soon(pump_outgoing)
                await pump_incoming()
                tg.cancel_scope.cancel()
        finally:
            host.unsubscribe(client_id, sub)

    @app.get("/healthz")
    async def health():
        return {"ok": True, "v": PROTOCOL_VERSION}

    return app


def serve(scene: SceneConfig, registry: Registry, port: int, host_addr: str = "127.0.0.1") -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    app = build_app(scene, registry)
    uvicorn.run(app, host=host_addr, port=port, log_level="warning")
