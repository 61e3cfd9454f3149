"""Deterministic kinematic playground closing the control loop.

The world holds a velocity-servoed end-effector inside a virtual cage, eight
grippable cubes on a table, a stencil of target squares, and a head-mounted
camera model. It synthesizes the two sensor streams the runtime consumes:
noisy marker observations and a noisy, slowly drifting gaze point.

There is no rigid-body dynamics engine on purpose: the effector is velocity
controlled and compliant, so the only contact behaviour that matters is the
spring force against the table that trips the e-stop.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from gazebot.fusion import MarkerObservation
from gazebot.geometry import (
    BehindCameraError,
    CameraIntrinsics,
    Pose,
    Quaternion,
    compose,
    invert,
    project_point,
)
from gazebot.hittest import GazeSample

FRAME_EE = "ee"
FRAME_WORLD = "world"

GRIP_OPEN = "open"
GRIP_CLOSED = "closed"

INPUT_DT_MS = 20.0  # 50 Hz observation/gaze stream
SERVO_TICKS_PER_FRAME = 4  # 200 Hz servo


@dataclass(frozen=True)
class NoiseConfig:
    marker_sigma_t: float = 0.0  # m, per axis
    marker_sigma_r: float = 0.0  # rad, total small-angle std
    marker_dropout: float = 0.0  # per marker per frame
    gaze_sigma: float = 0.0  # px, per axis
    gaze_drift_rate: float = 0.0  # px/s random-walk growth
    visibility_cone: float = 1.2  # rad, max angle marker normal vs camera ray
    blinks: tuple[tuple[float, float], ...] = ()  # (start_ms, end_ms) invalid-gaze windows

    def __post_init__(self) -> None:
        if min(self.marker_sigma_t, self.marker_sigma_r, self.gaze_sigma, self.gaze_drift_rate) < 0:
            raise ValueError("noise magnitudes must be non-negative")
        if not 0.0 <= self.marker_dropout <= 1.0:
            raise ValueError("dropout must be a probability")


@dataclass(frozen=True)
class MarkerPlacement:
    marker_id: int
    frame: str  # "ee" (rides the end-effector) or "world" (table-fixed)
    pose: Pose


@dataclass(frozen=True)
class Stencil:
    sheet_center: np.ndarray  # (2,)
    sheet_size: np.ndarray  # (2,) full width/height
    square_edge: float
    squares: np.ndarray  # (n, 2) centers

    def __post_init__(self) -> None:
        object.__setattr__(self, "sheet_center", np.asarray(self.sheet_center, float).reshape(2))
        object.__setattr__(self, "sheet_size", np.asarray(self.sheet_size, float).reshape(2))
        object.__setattr__(self, "squares", np.asarray(self.squares, float).reshape(-1, 2))
        half = self.sheet_size / 2
        lo = self.sheet_center - half + self.square_edge / 2
        hi = self.sheet_center + half - self.square_edge / 2
        if np.any(self.squares < lo) or np.any(self.squares > hi):
            raise ValueError("stencil squares must lie inside the sheet")

    @property
    def sheet_min(self) -> np.ndarray:
        return self.sheet_center - self.sheet_size / 2

    @property
    def sheet_max(self) -> np.ndarray:
        return self.sheet_center + self.sheet_size / 2


@dataclass(frozen=True)
class ControlParams:
    v_ref: tuple[float, float, float] = (0.1, 0.06, 0.08)
    force_limit: float = 30.0
    max_speed: float = 0.6
    continuous_period_ms: float = 400.0
    continuous_on: float = 0.4
    continuous_off: float = 0.2
    discrete_period_ms: float = 1000.0
    discrete_on: float = 0.8
    discrete_off: float = 0.8


@dataclass(frozen=True)
class ContactParams:
    spring_k: float = 3000.0  # N/m; ~1 cm over-travel reaches the 30 N limit
    descent_margin: float = 0.005  # m above the table where contact begins
    grasp_radius: float = 0.015  # m, cylinder around the jaw point


@dataclass(frozen=True)
class SceneConfig:
    seed: int
    cage_min: np.ndarray
    cage_max: np.ndarray
    table_height: float
    stencil: Stencil
    cube_edge: float
    cube_positions: np.ndarray  # (n, 2) table positions
    markers: tuple[MarkerPlacement, ...]
    camera: CameraIntrinsics
    head_pose: Pose
    ee_start: np.ndarray
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    control: ControlParams = field(default_factory=ControlParams)
    contact: ContactParams = field(default_factory=ContactParams)
    sway_amplitude: float = 0.0  # m, scripted lateral head sway
    sway_period_s: float = 4.0
    registry_dir: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "cage_min", np.asarray(self.cage_min, float).reshape(3))
        object.__setattr__(self, "cage_max", np.asarray(self.cage_max, float).reshape(3))
        object.__setattr__(self, "cube_positions", np.asarray(self.cube_positions, float).reshape(-1, 2))
        object.__setattr__(self, "ee_start", np.asarray(self.ee_start, float).reshape(3))
        rest = self.table_height + self.cube_edge / 2
        for xy in self.cube_positions:
            p = np.array([xy[0], xy[1], rest])
            if np.any(p < self.cage_min) or np.any(p > self.cage_max):
                raise ValueError(f"cube at {xy} rests outside the cage")

    def cube_rest_z(self) -> float:
        return self.table_height + self.cube_edge / 2

    # -- JSON round trip ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "cage": {"min": self.cage_min.tolist(), "max": self.cage_max.tolist()},
            "table_height": self.table_height,
            "stencil": {
                "sheet_center": self.stencil.sheet_center.tolist(),
                "sheet_size": self.stencil.sheet_size.tolist(),
                "square_edge": self.stencil.square_edge,
                "squares": self.stencil.squares.tolist(),
            },
            "cubes": {"edge": self.cube_edge, "positions": self.cube_positions.tolist()},
            "markers": [
                {
                    "id": m.marker_id,
                    "frame": m.frame,
                    "p": m.pose.position.tolist(),
                    "q": m.pose.rotation.as_array().tolist(),
                }
                for m in self.markers
            ],
            "camera": {
                "fx": self.camera.fx,
                "fy": self.camera.fy,
                "cx": self.camera.cx,
                "cy": self.camera.cy,
                "width": self.camera.width,
                "height": self.camera.height,
                "p": self.head_pose.position.tolist(),
                "q": self.head_pose.rotation.as_array().tolist(),
            },
            "ee_start": self.ee_start.tolist(),
            "noise": {
                "marker_sigma_t": self.noise.marker_sigma_t,
                "marker_sigma_r": self.noise.marker_sigma_r,
                "marker_dropout": self.noise.marker_dropout,
                "gaze_sigma": self.noise.gaze_sigma,
                "gaze_drift_rate": self.noise.gaze_drift_rate,
                "visibility_cone": self.noise.visibility_cone,
                "blinks": [list(b) for b in self.noise.blinks],
            },
            "control": {
                "v_ref": list(self.control.v_ref),
                "force_limit": self.control.force_limit,
                "max_speed": self.control.max_speed,
                "continuous_period_ms": self.control.continuous_period_ms,
                "continuous_on": self.control.continuous_on,
                "continuous_off": self.control.continuous_off,
                "discrete_period_ms": self.control.discrete_period_ms,
                "discrete_on": self.control.discrete_on,
                "discrete_off": self.control.discrete_off,
            },
            "contact": {
                "spring_k": self.contact.spring_k,
                "descent_margin": self.contact.descent_margin,
                "grasp_radius": self.contact.grasp_radius,
            },
            "head_sway": {"amplitude": self.sway_amplitude, "period_s": self.sway_period_s},
            "registry_dir": self.registry_dir,
        }

    @staticmethod
    def from_dict(d: dict) -> "SceneConfig":
        cam = d["camera"]
        noise = d.get("noise", {})
        control = d.get("control", {})
        contact = d.get("contact", {})
        sway = d.get("head_sway", {})
        return SceneConfig(
            seed=int(d["seed"]),
            cage_min=d["cage"]["min"],
            cage_max=d["cage"]["max"],
            table_height=float(d["table_height"]),
            stencil=Stencil(
                sheet_center=d["stencil"]["sheet_center"],
                sheet_size=d["stencil"]["sheet_size"],
                square_edge=float(d["stencil"]["square_edge"]),
                squares=d["stencil"]["squares"],
            ),
            cube_edge=float(d["cubes"]["edge"]),
            cube_positions=d["cubes"]["positions"],
            markers=tuple(
                MarkerPlacement(int(m["id"]), m["frame"], Pose(np.array(m["p"]), Quaternion(*m["q"])))
                for m in d["markers"]
            ),
            camera=CameraIntrinsics(
                fx=cam["fx"], fy=cam["fy"], cx=cam["cx"], cy=cam["cy"],
                width=cam["width"], height=cam["height"],
            ),
            head_pose=Pose(np.array(cam["p"]), Quaternion(*cam["q"])),
            ee_start=d["ee_start"],
            noise=NoiseConfig(
                marker_sigma_t=noise.get("marker_sigma_t", 0.0),
                marker_sigma_r=noise.get("marker_sigma_r", 0.0),
                marker_dropout=noise.get("marker_dropout", 0.0),
                gaze_sigma=noise.get("gaze_sigma", 0.0),
                gaze_drift_rate=noise.get("gaze_drift_rate", 0.0),
                visibility_cone=noise.get("visibility_cone", 1.2),
                blinks=tuple(tuple(b) for b in noise.get("blinks", [])),
            ),
            control=ControlParams(
                v_ref=tuple(control.get("v_ref", (0.1, 0.06, 0.08))),
                force_limit=control.get("force_limit", 30.0),
                max_speed=control.get("max_speed", 0.6),
                continuous_period_ms=control.get("continuous_period_ms", 400.0),
                continuous_on=control.get("continuous_on", 0.4),
                continuous_off=control.get("continuous_off", 0.2),
                discrete_period_ms=control.get("discrete_period_ms", 1000.0),
                discrete_on=control.get("discrete_on", 0.8),
                discrete_off=control.get("discrete_off", 0.8),
            ),
            contact=ContactParams(
                spring_k=contact.get("spring_k", 3000.0),
                descent_margin=contact.get("descent_margin", 0.005),
                grasp_radius=contact.get("grasp_radius", 0.015),
            ),
            sway_amplitude=sway.get("amplitude", 0.0),
            sway_period_s=sway.get("period_s", 4.0),
            registry_dir=d.get("registry_dir"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @staticmethod
    def load(path: str | Path) -> "SceneConfig":
        path = Path(path)
        cfg = SceneConfig.from_dict(json.loads(path.read_text()))
        if cfg.registry_dir is not None and not Path(cfg.registry_dir).is_absolute():
            cfg = replace(cfg, registry_dir=str((path.parent / cfg.registry_dir).resolve()))
        return cfg


@dataclass(frozen=True)
class SimState:
    t: float  # ms
    ee_pose: Pose
    gripper: str  # "open" | "closed"
    held_cube: int | None
    grasp_offset: Pose | None
    cube_poses: tuple[Pose, ...]
    contact_force: float
    estop: bool
    score: int
    recalibrations: int


class Simulator:
    """Owns the world state; one loop thread steps it, snapshots are values."""

    def __init__(self, scene: SceneConfig):
        self.scene = scene
        rest = scene.cube_rest_z()
        self.state = SimState(
            t=0.0,
            ee_pose=Pose(scene.ee_start.copy()),
            gripper=GRIP_OPEN,
            held_cube=None,
            grasp_offset=None,
            cube_poses=tuple(
                Pose(np.array([x, y, rest])) for x, y in scene.cube_positions
            ),
            contact_force=0.0,
            estop=False,
            score=0,
            recalibrations=0,
        )
        # independent substreams so toggling one noise channel does not
        # shift the draws of another
        seeds = np.random.SeedSequence(scene.seed).spawn(3)
        self._rng_markers = np.random.default_rng(seeds[0])
        self._rng_dropout = np.random.default_rng(seeds[1])
        self._rng_gaze = np.random.default_rng(seeds[2])
        self._gaze_drift = np.zeros(2)

    # -- kinematics ----------------------------------------------------------

    def step(self, cmd, dt: float = 0.005) -> SimState:
        """Advance one servo tick; velocity is assumed cage-clamped upstream."""
        s = self.state
        pos = s.ee_pose.position + np.asarray(cmd.v, float) * dt
        ee_pose = Pose(pos, s.ee_pose.rotation)

        gripper = s.gripper
        held = s.held_cube
        offset = s.grasp_offset
        cubes = list(s.cube_poses)

        if cmd.gripper == "close" and gripper == GRIP_OPEN:
            gripper = GRIP_CLOSED
            held, offset = self._try_grasp(ee_pose, cubes)
        elif cmd.gripper == "open" and gripper == GRIP_CLOSED:
            gripper = GRIP_OPEN
            if held is not None:
                cubes[held] = self._dropped(cubes[held])
                held, offset = None, None

        if held is not None:
            cubes[held] = compose(ee_pose, offset)

        depth = self.scene.table_height + self.scene.contact.descent_margin - pos[2]
        force = self.scene.contact.spring_k * max(0.0, depth)

        self.state = replace(
            s,
            t=s.t + dt * 1000.0,
            ee_pose=ee_pose,
            gripper=gripper,
            held_cube=held,
            grasp_offset=offset,
            cube_poses=tuple(cubes),
            contact_force=force,
            estop=bool(cmd.estop),
        )
        return self.state

    def _try_grasp(self, ee_pose: Pose, cubes: list[Pose]) -> tuple[int | None, Pose | None]:
        r = self.scene.contact.grasp_radius
        jaw = ee_pose.position
        best, best_d = None, None
        for i, cube in enumerate(cubes):
            d = cube.position - jaw
            if np.hypot(d[0], d[1]) <= r and abs(d[2]) <= r:
                dist = float(np.linalg.norm(d))
                if best is None or dist < best_d:
                    best, best_d = i, dist
        if best is None:
            return None, None
        return best, compose(invert(ee_pose), cubes[best])

    def _dropped(self, cube: Pose) -> Pose:
        # straight-down drop onto the table plane, rotation stays locked
        p = cube.position.copy()
        p[2] = self.scene.cube_rest_z()
        return Pose(p, Quaternion.identity())

    def add_score(self, points: int) -> None:
        self.state = replace(self.state, score=self.state.score + points)

    # -- sensors ---------------------------------------------------------------

    def head_pose_at(self, t_ms: float) -> Pose:
        base = self.scene.head_pose
        if self.scene.sway_amplitude == 0.0:
            return base
        phase = 2.0 * np.pi * (t_ms / 1000.0) / self.scene.sway_period_s
        offset = np.array([self.scene.sway_amplitude * np.sin(phase), 0.0, 0.0])
        return Pose(base.position + offset, base.rotation)

    def marker_world_pose(self, placement: MarkerPlacement) -> Pose:
        if placement.frame == FRAME_EE:
            return compose(self.state.ee_pose, placement.pose)
        return placement.pose

    def observe_markers(self) -> list[MarkerObservation]:
        """Synthesize this frame's marker detections.

        Noise and dropout draws happen for every placement on every frame in
        placement order, whether or not the marker ends up visible, so the
        random streams stay aligned across configuration changes.
        """
        scene = self.scene
        noise = scene.noise
        head = self.head_pose_at(self.state.t)
        cam_from_world = invert(head)
        out: list[MarkerObservation] = []
        for placement in scene.markers:
            dp = self._rng_markers.normal(0.0, 1.0, size=3)
            drv = self._rng_markers.normal(0.0, 1.0, size=3)
            dropped = self._rng_dropout.uniform() < noise.marker_dropout

            world = self.marker_world_pose(placement)
            cam = compose(cam_from_world, world)
            if dropped or not self._marker_visible(world, cam, head):
                continue
            position = cam.position + noise.marker_sigma_t * dp
            rotation = cam.rotation
            if noise.marker_sigma_r > 0.0:
                wobble = Quaternion.from_rotvec(drv * (noise.marker_sigma_r / np.sqrt(3.0)))
                rotation = wobble.multiply(rotation)
            out.append(MarkerObservation(placement.marker_id, Pose(position, rotation), self.state.t))
        return out

    def _marker_visible(self, world: Pose, cam: Pose, head: Pose) -> bool:
        to_camera = head.position - world.position
        n = float(np.linalg.norm(to_camera))
        if n < 1e-9:
            return False
        normal = world.rotation.rotate([0.0, 0.0, 1.0])
        cos_angle = float(np.dot(normal, to_camera)) / n
        if cos_angle < np.cos(self.scene.noise.visibility_cone):
            return False
        try:
            uv = project_point(self.scene.camera, cam.position)
        except BehindCameraError:
            return False
        k = self.scene.camera
        return 0.0 <= uv[0] <= k.width and 0.0 <= uv[1] <= k.height

    def synth_gaze(self, target_uv, t_ms: float, dt_s: float = INPUT_DT_MS / 1000.0) -> GazeSample:
        """Noisy gaze sample aimed at target_uv, with random-walk drift."""
        noise = self.scene.noise
        if noise.gaze_drift_rate > 0.0:
            self._gaze_drift = self._gaze_drift + self._rng_gaze.normal(
                0.0, noise.gaze_drift_rate * np.sqrt(dt_s), size=2
            )
        jitter = (
            self._rng_gaze.normal(0.0, noise.gaze_sigma, size=2)
            if noise.gaze_sigma > 0.0
            else np.zeros(2)
        )
        uv = np.asarray(target_uv, float) + jitter + self._gaze_drift
        k = self.scene.camera
        uv = np.clip(uv, [0.0, 0.0], [k.width, k.height])
        valid = not any(a <= t_ms <= b for a, b in noise.blinks)
        return GazeSample(u=float(uv[0]), v=float(uv[1]), t=t_ms, valid=valid)

    def recalibrate(self) -> None:
        """Zero the accumulated gaze drift; counted for the session report."""
        self._gaze_drift = np.zeros(2)
        self.state = replace(self.state, recalibrations=self.state.recalibrations + 1)
