"""Map activation snapshots to clamped Cartesian velocity commands.

Per axis the velocity is the reference speed scaled by the difference of the
antagonistic pair's activation levels; only buttons whose Schmitt status is
active contribute. A virtual cage scales per-axis velocity so an integration
step lands exactly on the boundary instead of crossing it, and a latched
e-stop zeroes everything once contact force exceeds the limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gazebot.inputs import ACTIVATED, ACTIVE, ActivationSnapshot, InputEvent
from gazebot.registry import Registry

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}

GRIPPER_NONE = "none"
GRIPPER_OPEN = "open"
GRIPPER_CLOSE = "close"

# Servo loop period: robot-side control runs at 200 Hz.
SERVO_DT_S = 0.005

# Position drift beyond this is a simulation fault, not float noise.
CAGE_FAULT_TOL_M = 1e-9


class ContainmentError(RuntimeError):
    """End-effector found outside the cage; integration upstream is broken."""


@dataclass(frozen=True)
class ControllerConfig:
    v_ref: np.ndarray  # per-axis reference speed, m/s
    cage_min: np.ndarray
    cage_max: np.ndarray
    force_limit: float = 30.0  # N
    max_speed: float = 0.6  # m/s

    def __post_init__(self) -> None:
        object.__setattr__(self, "v_ref", np.asarray(self.v_ref, dtype=float).reshape(3))
        object.__setattr__(self, "cage_min", np.asarray(self.cage_min, dtype=float).reshape(3))
        object.__setattr__(self, "cage_max", np.asarray(self.cage_max, dtype=float).reshape(3))
        if not np.all(self.cage_min < self.cage_max):
            raise ValueError("cage_min must be strictly below cage_max on every axis")
        if self.force_limit <= 0:
            raise ValueError("force limit must be positive")
        if np.any(self.v_ref <= 0):
            raise ValueError("v_ref must be positive on every axis")
        if float(np.linalg.norm(self.v_ref)) > self.max_speed:
            raise ValueError("|v_ref| exceeds the configured speed limit")


@dataclass(frozen=True)
class VelocityCommand:
    v: np.ndarray  # m/s
    gripper: str = GRIPPER_NONE
    estop: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))


def compute_velocity(
    snapshot: ActivationSnapshot, registry: Registry, config: ControllerConfig
) -> np.ndarray:
    """Antagonistic activation differences scaled by v_ref, per axis.

    Buttons below their switch-on threshold (status inactive) contribute
    zero even when their raw level is nonzero; absent buttons contribute 0.
    """
    v = np.zeros(3)
    for (axis, direction), button_id in registry.axis_buttons().items():
        if snapshot.status_of(button_id) != ACTIVE:
            continue
        v[AXIS_INDEX[axis]] += direction * snapshot.activation_of(button_id)
    return config.v_ref * v


def apply_cage(pos, v, dt: float, config: ControllerConfig) -> np.ndarray:
    """Scale per-axis velocity so pos + v*dt stays inside the cage.

    A step that would cross a wall is shortened to land on it; the other
    axes are untouched, so the effector can slide along walls.
    """
    pos = np.asarray(pos, dtype=float).reshape(3)
    v = np.array(v, dtype=float).reshape(3)
    if np.any(pos < config.cage_min - CAGE_FAULT_TOL_M) or np.any(
        pos > config.cage_max + CAGE_FAULT_TOL_M
    ):
        raise ContainmentError(f"position {pos} outside cage before clamping")
    pos = np.clip(pos, config.cage_min, config.cage_max)
    ahead = pos + v * dt
    for i in range(3):
        if ahead[i] > config.cage_max[i]:
            v[i] = (config.cage_max[i] - pos[i]) / dt
        elif ahead[i] < config.cage_min[i]:
            v[i] = (config.cage_min[i] - pos[i]) / dt
    return v


class SafetyLatch:
    """Latched e-stop: trips when force exceeds the limit, cleared explicitly."""

    def __init__(self, config: ControllerConfig):
        self.config = config
        self.estop = False

    def update(self, force: float) -> bool:
        if force < 0:
            raise ValueError("contact force cannot be negative")
        if force > self.config.force_limit:
            self.estop = True
        return self.estop

    def clear(self) -> None:
        self.estop = False


def gripper_command(events: list[InputEvent], registry: Registry) -> str:
    """Latest activated edge on a gripper-bound button this frame wins."""
    verbs = registry.gripper_buttons()
    best: tuple[float, int, str] | None = None
    for order, e in enumerate(events):
        if e.edge != ACTIVATED or e.button_id not in verbs:
            continue
        key = (e.t, order, verbs[e.button_id])
        if best is None or key[:2] >= best[:2]:
            best = key
    return best[2] if best else GRIPPER_NONE


class ServoController:
    """Stateful facade used by the frame loop: snapshot + events -> command."""

    def __init__(self, registry: Registry, config: ControllerConfig):
        self.registry = registry
        self.config = config
        self.latch = SafetyLatch(config)

    def command(self, snapshot: ActivationSnapshot, events: list[InputEvent]) -> VelocityCommand:
        if self.latch.estop:
            return VelocityCommand(np.zeros(3), GRIPPER_NONE, estop=True)
        return VelocityCommand(
            compute_velocity(snapshot, self.registry, self.config),
            gripper_command(events, self.registry),
            estop=False,
        )

    def caged(self, pos, cmd: VelocityCommand, dt: float = SERVO_DT_S) -> VelocityCommand:
        return VelocityCommand(apply_cage(pos, cmd.v, dt, self.config), cmd.gripper, cmd.estop)

    def update_safety(self, force: float) -> bool:
        return self.latch.update(force)

    def clear_estop(self) -> None:
        self.latch.clear()
