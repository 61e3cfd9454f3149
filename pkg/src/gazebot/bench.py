"""Block pick-and-place benchmark: scoring, scripted oracle operator, runner.

Eight cubes must be placed onto eight stencil squares. Placing scores +2
fully inside the target square, +1 partially inside, 0 on the blank sheet,
-1 partially off the sheet and -2 fully off, for a maximum of 16 points;
blocks left unplaced at an abort count -2 each. A block is always judged
against the nearest not-yet-consumed square, and a square is consumed once
a block actually touches it.

The oracle policy is a scripted operator: it fixates button zone centroids
through the same 50 Hz gaze channel a human would use, one axis at a time,
and decides when to look away by simulating the exact activation decay the
input pipeline will produce (looking away early so the effector coasts onto
the target).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from gazebot import presets
from gazebot.fusion import fuse_frame
from gazebot.hittest import GazeSample, ProjectedZone, gaze_hit, project_zone
from gazebot.inputs import ACTIVE, ActivationProfile, ActivationSnapshot, InputEvent, InputPipeline
from gazebot.registry import Registry
from gazebot.servo import ServoController, VelocityCommand
from gazebot.sim import (
    GRIP_CLOSED,
    GRIP_OPEN,
    INPUT_DT_MS,
    SERVO_TICKS_PER_FRAME,
    SceneConfig,
    SimState,
    Simulator,
    Stencil,
)

XY_TOLERANCE_M = 0.004
Z_TOLERANCE_M = 0.003
NEUTRAL_GAZE = (20.0, 20.0)

STUCK_LIMIT_MS = 120_000.0
FRAME_LIMIT = 60_000  # 20 simulated minutes


class ProtocolAbort(RuntimeError):
    """Benchmark aborted; carries the partial report."""

    def __init__(self, message: str, report: "BenchReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class ScoreEvent:
    block: int
    points: int
    square: int | None  # consumed square index, when one was touched
    t_pick: float  # ms
    t_drop: float  # ms


def _interval_overlap(lo1, hi1, lo2, hi2) -> float:
    return max(0.0, min(hi1, hi2) - max(lo1, lo2))


def score_block(
    cube_xy,
    stencil: Stencil,
    cube_edge: float = 0.02,
    available: set[int] | None = None,
) -> tuple[int, int | None]:
    """Judge one resting block; returns (points, consumed square or None)."""
    cube_xy = np.asarray(cube_xy, float).reshape(2)
    squares = stencil.squares
    if available is None:
        available = set(range(len(squares)))
    ch = cube_edge / 2.0
    cube_min, cube_max = cube_xy - ch, cube_xy + ch

    nearest = None
    if available:
        order = sorted(available, key=lambda i: (float(np.linalg.norm(squares[i] - cube_xy)), i))
        nearest = order[0]
        sh = stencil.square_edge / 2.0
        sq_min, sq_max = squares[nearest] - sh, squares[nearest] + sh
        if np.all(cube_min >= sq_min) and np.all(cube_max <= sq_max):
            return 2, nearest
        ox = _interval_overlap(cube_min[0], cube_max[0], sq_min[0], sq_max[0])
        oy = _interval_overlap(cube_min[1], cube_max[1], sq_min[1], sq_max[1])
        if ox > 0.0 and oy > 0.0:
            return 1, nearest

    sheet_min, sheet_max = stencil.sheet_min, stencil.sheet_max
    if np.all(cube_min >= sheet_min) and np.all(cube_max <= sheet_max):
        return 0, None
    ox = _interval_overlap(cube_min[0], cube_max[0], sheet_min[0], sheet_max[0])
    oy = _interval_overlap(cube_min[1], cube_max[1], sheet_min[1], sheet_max[1])
    if ox > 0.0 and oy > 0.0:
        return -1, None
    return -2, None


@dataclass(frozen=True)
class BenchReport:
    total_score: int
    max_score: int
    events: tuple[ScoreEvent, ...]
    pick_durations_s: tuple[float, ...]
    drop_durations_s: tuple[float, ...]
    total_time_s: float
    recalibrations: int
    estop_count: int
    aborted: bool
    frames: int

    def to_dict(self) -> dict:
        return {
            "total_score": self.total_score,
            "max_score": self.max_score,
            "blocks": [
                {
                    "block": e.block,
                    "points": e.points,
                    "square": e.square,
                    "t_pick_ms": e.t_pick,
                    "t_drop_ms": e.t_drop,
                }
                for e in self.events
            ],
            "pick_durations_s": list(self.pick_durations_s),
            "drop_durations_s": list(self.drop_durations_s),
            "total_time_s": self.total_time_s,
            "recalibrations": self.recalibrations,
            "estop_count": self.estop_count,
            "aborted": self.aborted,
            "frames": self.frames,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        lines = [
            "Block Pick and Place - score form",
            "=" * 46,
            f"{'block':>5}  {'points':>6}  {'pick (s)':>9}  {'drop (s)':>9}",
        ]
        for e, pick, drop in zip(self.events, self.pick_durations_s, self.drop_durations_s):
            lines.append(f"{e.block:>5}  {e.points:>+6d}  {pick:>9.2f}  {drop:>9.2f}")
        placed = len(self.events)
        outcome = {p: 0 for p in (2, 1, 0, -1, -2)}
        for e in self.events:
            outcome[e.points] += 1
        lines += [
            "-" * 46,
            "outcomes  " + "  ".join(f"{p:+d}: {n}" for p, n in outcome.items()),
            f"placed {placed}/8   total {self.total_score}/{self.max_score}"
            f"   time {self.total_time_s:.1f} s",
            f"recalibrations {self.recalibrations}   e-stops {self.estop_count}"
            + ("   ABORTED" if self.aborted else ""),
        ]
        return "\n".join(lines)


@dataclass(frozen=True)
class PolicyView:
    """Everything the scripted operator can see after a frame."""

    state: SimState
    zones: dict[str, ProjectedZone]
    snapshot: ActivationSnapshot
    events: tuple[InputEvent, ...]


@dataclass(frozen=True)
class PolicyDecision:
    target_uv: tuple[float, float]
    intent: str


AXIS_I = {"x": 0, "y": 1, "z": 2}

ALIGN, DESCEND, CLOSE, LIFT, CARRY, LOWER, OPEN, RAISE, REOPEN, DONE = (
    "align", "descend", "close", "lift", "carry", "lower", "open", "raise", "reopen", "done",
)


class OraclePolicy:
    """Finite-state scripted operator completing the protocol block by block."""

    def __init__(self, scene: SceneConfig, registry: Registry, profiles: dict[str, ActivationProfile]):
        self.scene = scene
        self.registry = registry
        self.profiles = profiles
        self.axis_buttons = registry.axis_buttons()
        grip = {verb: bid for bid, verb in registry.gripper_buttons().items()}
        self.open_button = grip["open"]
        self.close_button = grip["close"]
        self.block = 0
        self.phase = ALIGN
        self.safe_z = float(scene.ee_start[2])
        self.grasp_z = scene.cube_rest_z() + 0.002
        self.v_ref = np.asarray(scene.control.v_ref, float)
        self._movement = [bid for (_, _), bid in sorted(self.axis_buttons.items())]

    # -- decay prediction -----------------------------------------------------

    def _coast_travel(self, a: float, status: str, profile: ActivationProfile, v_axis: float) -> float:
        """Distance covered while the activation decays to switch-off,
        frame-exact mirror of the pipeline update."""
        dwell = a * profile.period_ms
        travel = 0.0
        while status == ACTIVE:
            dwell = max(0.0, dwell - INPUT_DT_MS)
            level = dwell / profile.period_ms
            if level < profile.a_off:
                break
            travel += v_axis * level * (INPUT_DT_MS / 1000.0)
        return travel

    def _stay_is_better(self, remaining: float, bid: str, snapshot: ActivationSnapshot, v_axis: float) -> bool:
        profile = self.profiles[bid]
        a = snapshot.activation_of(bid)
        status = snapshot.status_of(bid)
        err_leave = remaining - self._coast_travel(a, status, profile, v_axis)

        dwell_next = min(a * profile.period_ms + INPUT_DT_MS, profile.period_ms)
        a_next = dwell_next / profile.period_ms
        status_next = ACTIVE if a_next > profile.a_on else status
        travel_next = v_axis * a_next * (INPUT_DT_MS / 1000.0) if status_next == ACTIVE else 0.0
        err_stay = remaining - travel_next - self._coast_travel(a_next, status_next, profile, v_axis)
        return abs(err_stay) <= abs(err_leave)

    # -- per-frame decision ------------------------------------------------------

    def decide(self, view: PolicyView | None) -> PolicyDecision:
        if view is None:
            return PolicyDecision(NEUTRAL_GAZE, "boot")
        if view.state.estop:
            return PolicyDecision(NEUTRAL_GAZE, "paused:estop")
        if self.phase == DONE:
            return PolicyDecision(NEUTRAL_GAZE, "done")

        state = view.state
        handler = {
            ALIGN: self._phase_align,
            DESCEND: self._phase_descend,
            CLOSE: self._phase_close,
            LIFT: self._phase_lift,
            CARRY: self._phase_carry,
            LOWER: self._phase_lower,
            OPEN: self._phase_open,
            RAISE: self._phase_raise,
            REOPEN: self._phase_reopen,
        }[self.phase]
        return handler(view, state)

    def _fixate(self, view: PolicyView, bid: str, intent: str) -> PolicyDecision:
        zone = view.zones.get(bid)
        if zone is None or not zone.visible:
            return PolicyDecision(NEUTRAL_GAZE, f"{intent}:zone-hidden")
        c = zone.centroid
        return PolicyDecision((float(c[0]), float(c[1])), intent)

    def _servo(self, view: PolicyView, target: np.ndarray, axes: str, intent: str):
        """Returns a decision while work remains on the given axes, else None."""
        state, snap = view.state, view.snapshot
        pos = state.ee_pose.position
        for axis in axes:
            i = AXIS_I[axis]
            err = float(target[i] - pos[i])
            if abs(err) <= (XY_TOLERANCE_M if axis in "xy" else Z_TOLERANCE_M):
                continue
            direction = 1 if err > 0 else -1
            bid = self.axis_buttons[(axis, direction)]
            opposite = self.axis_buttons[(axis, -direction)]
            if snap.status_of(opposite) == ACTIVE:
                continue  # let the wrong-way coast die before reversing
            if self._stay_is_better(abs(err), bid, snap, self.v_ref[i]):
                return self._fixate(view, bid, f"{intent}:{axis}{'+' if direction > 0 else '-'}")
        settled = all(snap.status_of(b) != ACTIVE for b in self._movement)
        if settled and self._within(target, pos, axes):
            return None
        return PolicyDecision(NEUTRAL_GAZE, f"{intent}:coast")

    def _within(self, target, pos, axes: str) -> bool:
        for axis in axes:
            i = AXIS_I[axis]
            tol = XY_TOLERANCE_M if axis in "xy" else Z_TOLERANCE_M
            if abs(target[i] - pos[i]) > tol:
                return False
        return True

    # -- phases -----------------------------------------------------------------

    def _cube_target(self, state: SimState) -> np.ndarray:
        cube = state.cube_poses[self.block].position
        return np.array([cube[0], cube[1], self.safe_z])

    def _phase_align(self, view, state):
        decision = self._servo(view, self._cube_target(state), "xy", f"align:{self.block}")
        if decision is not None:
            return decision
        self.phase = DESCEND
        return self._phase_descend(view, state)

    def _phase_descend(self, view, state):
        target = self._cube_target(state)
        target[2] = self.grasp_z
        decision = self._servo(view, target, "z", f"descend:{self.block}")
        if decision is not None:
            return decision
        self.phase = CLOSE
        return self._phase_close(view, state)

    def _phase_close(self, view, state):
        if state.gripper == GRIP_CLOSED:
            if state.held_cube is None:
                self.phase = REOPEN  # whiffed; open and realign
            else:
                self.phase = LIFT
            return self.decide(view)
        return self._fixate(view, self.close_button, f"close:{self.block}")

    def _phase_reopen(self, view, state):
        if state.gripper == GRIP_OPEN:
            self.phase = ALIGN
            return self.decide(view)
        return self._fixate(view, self.open_button, f"reopen:{self.block}")

    def _phase_lift(self, view, state):
        target = state.ee_pose.position.copy()
        target[2] = self.safe_z
        decision = self._servo(view, target, "z", f"lift:{self.block}")
        if decision is not None:
            return decision
        self.phase = CARRY
        return self._phase_carry(view, state)

    def _drop_target(self, state: SimState) -> np.ndarray:
        square = self.scene.stencil.squares[self.block]
        offset = state.grasp_offset.position if state.grasp_offset is not None else np.zeros(3)
        # park the effector so the held cube lands centered on the square
        return np.array([square[0] - offset[0], square[1] - offset[1], self.safe_z])

    def _phase_carry(self, view, state):
        decision = self._servo(view, self._drop_target(state), "xy", f"carry:{self.block}")
        if decision is not None:
            return decision
        self.phase = LOWER
        return self._phase_lower(view, state)

    def _phase_lower(self, view, state):
        target = self._drop_target(state)
        offset_z = state.grasp_offset.position[2] if state.grasp_offset is not None else 0.0
        target[2] = self.scene.cube_rest_z() - offset_z
        decision = self._servo(view, target, "z", f"lower:{self.block}")
        if decision is not None:
            return decision
        self.phase = OPEN
        return self._phase_open(view, state)

    def _phase_open(self, view, state):
        if state.gripper == GRIP_OPEN:
            self.phase = RAISE
            return self.decide(view)
        return self._fixate(view, self.open_button, f"open:{self.block}")

    def _phase_raise(self, view, state):
        target = state.ee_pose.position.copy()
        target[2] = self.safe_z
        decision = self._servo(view, target, "z", f"raise:{self.block}")
        if decision is not None:
            return decision
        self.block += 1
        self.phase = ALIGN if self.block < len(state.cube_poses) else DONE
        return self.decide(view)


def pipeline_frame(registry: Registry, camera, pipeline: InputPipeline, markers, gaze: GazeSample, t: float):
    """One pass of fuse -> project -> hit test -> accumulator step.

    This single code path serves the live loop, session replay and the
    service host, which is what makes replay bit-exact against a live run.
    """
    fused = fuse_frame(markers, registry)
    zones = {
        f.button_id: project_zone(f, registry.corners_of(f.button_id), camera) for f in fused
    }
    hits = {bid for bid, zone in zones.items() if gaze_hit(zone, gaze)}
    events = pipeline.step(hits, t)
    return zones, hits, events, pipeline.snapshot()


@dataclass
class FrameTap:
    """Optional per-frame capture for session recording."""

    frames: list = field(default_factory=list)

    def __call__(self, t, markers, gaze):
        self.frames.append((t, markers, gaze))


class BenchRunner:
    """Drives sensors -> fusion -> hit test -> pipeline -> servo -> sim."""

    def __init__(self, scene: SceneConfig, registry: Registry, policy=None, tap=None):
        self.scene = scene
        self.registry = registry
        self.sim = Simulator(scene)
        self.profiles = presets.activation_profiles(registry, scene)
        self.pipeline = InputPipeline(self.profiles)
        self.controller = ServoController(registry, presets.controller_config(scene))
        self.policy = policy or OraclePolicy(scene, registry, self.profiles)
        self.tap = tap
        self.view: PolicyView | None = None
        self.event_log: list[InputEvent] = []
        self.estop_count = 0
        self.frame_count = 0

    def run_frame(self, gaze: GazeSample | None = None) -> PolicyView:
        """Advance 20 ms; gaze defaults to the policy's fixation choice."""
        t = self.sim.state.t + INPUT_DT_MS
        markers = self.sim.observe_markers()
        if gaze is None:
            decision = self.policy.decide(self.view)
            gaze = self.sim.synth_gaze(decision.target_uv, t)
        if self.tap is not None:
            self.tap(t, markers, gaze)

        zones, _, events, snapshot = pipeline_frame(
            self.registry, self.scene.camera, self.pipeline, markers, gaze, t
        )
        self.event_log.extend(events)

        cmd = self.controller.command(snapshot, events)
        for _ in range(SERVO_TICKS_PER_FRAME):
            if self.controller.latch.estop:
                cmd = VelocityCommand(np.zeros(3), "none", estop=True)
            caged = self.controller.caged(self.sim.state.ee_pose.position, cmd)
            self.sim.step(caged, dt=0.005)
            was = self.controller.latch.estop
            self.controller.update_safety(self.sim.state.contact_force)
            if self.controller.latch.estop and not was:
                self.estop_count += 1

        self.frame_count += 1
        self.view = PolicyView(self.sim.state, zones, snapshot, tuple(events))
        return self.view


def run_protocol(
    scene: SceneConfig,
    registry: Registry | None = None,
    policy=None,
    seed: int | None = None,
    tap=None,
) -> BenchReport:
    """Run the full benchmark; raises ProtocolAbort with a partial report."""
    from gazebot.registry import load_registry_dir

    if seed is not None:
        scene = replace(scene, seed=seed)
    if registry is None:
        registry = (
            presets.table_registry()
            if scene.registry_dir is None
            else load_registry_dir(scene.registry_dir)
        )
    runner = BenchRunner(scene, registry, policy=policy, tap=tap)
    n_blocks = len(scene.cube_positions)

    events: list[ScoreEvent] = []
    available = set(range(len(scene.stencil.squares)))
    t_last_drop = 0.0
    t_pick: float | None = None
    last_progress = 0.0
    pick_durations: list[float] = []
    drop_durations: list[float] = []
    prev_held = None

    def build_report(aborted: bool) -> BenchReport:
        total = sum(e.points for e in events) - 2 * (n_blocks - len(events))
        return BenchReport(
            total_score=total,
            max_score=2 * n_blocks,
            events=tuple(events),
            pick_durations_s=tuple(pick_durations),
            drop_durations_s=tuple(drop_durations),
            total_time_s=t_last_drop / 1000.0,
            recalibrations=runner.sim.state.recalibrations,
            estop_count=runner.estop_count,
            aborted=aborted,
            frames=runner.frame_count,
        )

    while len(events) < n_blocks:
        view = runner.run_frame()
        state = view.state
        if prev_held is None and state.held_cube is not None:
            t_pick = state.t
            pick_durations.append((t_pick - t_last_drop) / 1000.0)
        elif prev_held is not None and state.held_cube is None:
            dropped = prev_held
            points, consumed = score_block(
                state.cube_poses[dropped].position[:2],
                scene.stencil,
                cube_edge=scene.cube_edge,
                available=available,
            )
            if consumed is not None:
                available.discard(consumed)
            events.append(ScoreEvent(dropped, points, consumed, t_pick or state.t, state.t))
            runner.sim.add_score(points)
            drop_durations.append((state.t - (t_pick or state.t)) / 1000.0)
            t_last_drop = state.t
            t_pick = None
            last_progress = state.t
        prev_held = state.held_cube

        if state.t - last_progress > STUCK_LIMIT_MS:
            raise ProtocolAbort("no scoring progress for 120 s", build_report(aborted=True))
        if runner.frame_count > FRAME_LIMIT:
            raise ProtocolAbort("frame budget exhausted", build_report(aborted=True))

    return build_report(aborted=False)
