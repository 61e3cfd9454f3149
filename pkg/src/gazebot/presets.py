"""Bundled scene and button layout builders.

World frame: z up, table surface at z = 0, the operator sits on the +y side
looking toward -y. Their "left" is therefore +x, "closer" is +y, and the
camera image keeps left/right unmirrored.

``table_scene`` recreates the benchmark setup: a stencil sheet with eight
target squares in two rows, eight 2 cm cubes lined up on both sides of it,
a movement-arrow interface riding the end-effector (fused from three
markers) and a separate two-button gripper stand at the table edge.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from gazebot.geometry import CameraIntrinsics, Pose, Quaternion, compose, invert
from gazebot.inputs import ActivationProfile
from gazebot.registry import (
    BUTTONS_HEADER,
    MARKERS_HEADER,
    OFFSETS_HEADER,
    Registry,
    load_registry,
)
from gazebot.servo import ControllerConfig
from gazebot.sim import (
    ContactParams,
    ControlParams,
    MarkerPlacement,
    NoiseConfig,
    SceneConfig,
    Stencil,
)

# Orientation of everything mounted facing the operator: local +z -> world
# +y, local +y -> world +z; buttons and markers share it.
FACE_USER = Quaternion.from_matrix(
    np.array([[-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
)

MARKER_EDGE_M = 0.03
FACE_HALF_M = 0.018  # printed symbol 36x36 mm
ZONE_HALF_M = 0.028  # interaction zone 56x56 mm

# Interface element positions relative to the end-effector, world axes.
EE_BUTTONS = {
    "move_left": ("continuous", "+x", (0.07, 0.03, 0.09)),
    "move_right": ("continuous", "-x", (-0.07, 0.03, 0.09)),
    "move_up": ("continuous", "+z", (0.0, 0.03, 0.15)),
    "move_down": ("continuous", "-z", (0.0, 0.03, 0.03)),
    "move_closer": ("continuous", "+y", (0.05, 0.03, 0.21)),
    "move_farther": ("continuous", "-y", (-0.05, 0.03, 0.21)),
}
EE_MARKERS = {1: (-0.16, 0.03, 0.12), 2: (0.16, 0.03, 0.12), 3: (0.0, 0.03, 0.24)}

# Gripper stand, fixed to the table outside the cage.
STAND_BUTTONS = {
    "grip_open": ("discrete", "open", (-0.36, 0.10, 0.09), 10),
    "grip_close": ("discrete", "close", (-0.44, 0.10, 0.09), 11),
}
STAND_MARKERS = {10: (-0.36, 0.10, 0.16), 11: (-0.44, 0.10, 0.16)}


def _look_at(position, target) -> Pose:
    """Camera pose: +z optical axis toward target, +x image-right, +y down."""
    position = np.asarray(position, float)
    z = np.asarray(target, float) - position
    z = z / np.linalg.norm(z)
    x = np.cross(z, [0.0, 0.0, 1.0])
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return Pose(position, Quaternion.from_matrix(np.column_stack([x, y, z])))


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def table_registry_csvs() -> tuple[str, str, str]:
    """The bundled layout as (markers, buttons, offsets) CSV text."""
    marker_rows = [[mid, MARKER_EDGE_M] for mid in sorted({**EE_MARKERS, **STAND_MARKERS})]

    button_rows = []
    offset_rows = []
    for bid, (kind, action, rel) in EE_BUTTONS.items():
        button_rows.append([bid, kind, action, FACE_HALF_M, FACE_HALF_M, ZONE_HALF_M, ZONE_HALF_M])
        button_pose = Pose(np.array(rel), FACE_USER)
        for mid, mrel in EE_MARKERS.items():
            off = compose(invert(Pose(np.array(mrel), FACE_USER)), button_pose)
            q = off.rotation
            offset_rows.append([bid, mid, *(round(v, 12) for v in off.position), q.w, q.x, q.y, q.z])
    for bid, (kind, action, pos, mid) in STAND_BUTTONS.items():
        button_rows.append([bid, kind, action, FACE_HALF_M, FACE_HALF_M, ZONE_HALF_M, ZONE_HALF_M])
        off = compose(invert(Pose(np.array(STAND_MARKERS[mid]), FACE_USER)), Pose(np.array(pos), FACE_USER))
        q = off.rotation
        offset_rows.append([bid, mid, *(round(v, 12) for v in off.position), q.w, q.x, q.y, q.z])

    return (
        _csv(MARKERS_HEADER, marker_rows),
        _csv(BUTTONS_HEADER, button_rows),
        _csv(OFFSETS_HEADER, offset_rows),
    )


def table_registry() -> Registry:
    return load_registry(*table_registry_csvs())


def table_scene(seed: int = 0, noise: NoiseConfig | None = None) -> SceneConfig:
    squares = [(x, y) for y in (-0.04, 0.04) for x in (-0.105, -0.035, 0.035, 0.105)]
    cubes = [(x, y) for x in (-0.22, 0.22) for y in (-0.15, -0.05, 0.05, 0.15)]
    camera_pose = _look_at([0.0, 0.55, 0.50], [0.0, 0.0, 0.10])
    markers = tuple(
        MarkerPlacement(mid, "ee", Pose(np.array(rel), FACE_USER))
        for mid, rel in sorted(EE_MARKERS.items())
    ) + tuple(
        MarkerPlacement(mid, "world", Pose(np.array(pos), FACE_USER))
        for mid, pos in sorted(STAND_MARKERS.items())
    )
    return SceneConfig(
        seed=seed,
        cage_min=np.array([-0.35, -0.25, -0.02]),
        cage_max=np.array([0.35, 0.25, 0.30]),
        table_height=0.0,
        stencil=Stencil(
            sheet_center=[0.0, 0.0],
            sheet_size=[0.30, 0.20],
            square_edge=0.036,
            squares=squares,
        ),
        cube_edge=0.02,
        cube_positions=cubes,
        markers=markers,
        camera=CameraIntrinsics(fx=900.0, fy=900.0, cx=960.0, cy=540.0, width=1920, height=1080),
        head_pose=camera_pose,
        ee_start=np.array([0.0, 0.0, 0.16]),
        noise=noise or NoiseConfig(),
        control=ControlParams(),
        contact=ContactParams(),
    )


def controller_config(scene: SceneConfig) -> ControllerConfig:
    return ControllerConfig(
        v_ref=np.array(scene.control.v_ref),
        cage_min=scene.cage_min,
        cage_max=scene.cage_max,
        force_limit=scene.control.force_limit,
        max_speed=scene.control.max_speed,
    )


def activation_profiles(registry: Registry, scene: SceneConfig) -> dict[str, ActivationProfile]:
    c = scene.control
    out = {}
    for bid, b in registry.buttons.items():
        if b.kind == "discrete":
            out[bid] = ActivationProfile(c.discrete_period_ms, c.discrete_on, c.discrete_off, "discrete")
        else:
            out[bid] = ActivationProfile(c.continuous_period_ms, c.continuous_on, c.continuous_off, "continuous")
    return out


def latency_registry_csvs(n_markers: int = 9, n_buttons: int = 7) -> tuple[str, str, str]:
    """Synthetic wide layout for throughput measurements.

    A ring of markers facing the camera; five movement buttons plus the two
    gripper buttons, each fused from three parents.
    """
    marker_rows = [[mid, MARKER_EDGE_M] for mid in range(n_markers)]
    actions = ["+x", "-x", "+y", "-y", "+z", "-z"]
    button_rows = []
    offset_rows = []
    for i in range(n_buttons):
        if i == n_buttons - 2:
            bid, kind, action = "grip_open", "discrete", "open"
        elif i == n_buttons - 1:
            bid, kind, action = "grip_close", "discrete", "close"
        elif i < len(actions):
            bid, kind, action = f"move_{i}", "continuous", actions[i]
        else:
            bid, kind, action = f"aux_{i}", "discrete", f"event:aux_{i}"
        button_rows.append([bid, kind, action, FACE_HALF_M, FACE_HALF_M, ZONE_HALF_M, ZONE_HALF_M])
        for k in range(3):
            mid = (i + k * 3) % n_markers
            dx, dy = 0.05 * (k + 1), 0.02 * k
            offset_rows.append([bid, mid, dx, dy, 0.0, 1, 0, 0, 0])
    return (
        _csv(MARKERS_HEADER, marker_rows),
        _csv(BUTTONS_HEADER, button_rows),
        _csv(OFFSETS_HEADER, offset_rows),
    )


def latency_scene(seed: int = 7) -> tuple[SceneConfig, Registry]:
    """9 markers / 7 buttons in front of the camera, mild sensor noise."""
    markers_csv, buttons_csv, offsets_csv = latency_registry_csvs()
    registry = load_registry(markers_csv, buttons_csv, offsets_csv)
    placements = []
    for mid in range(9):
        row, col = divmod(mid, 3)
        pos = np.array([-0.12 + 0.12 * col, 0.0, 0.15 + 0.10 * row])
        placements.append(MarkerPlacement(mid, "world", Pose(pos, FACE_USER)))
    scene = table_scene(seed=seed, noise=NoiseConfig(marker_sigma_t=0.001, gaze_sigma=3.0))
    from dataclasses import replace

    return replace(scene, markers=tuple(placements)), registry


def write_bundle(root: str | Path, scene: SceneConfig | None = None) -> Path:
    """Write scenes/ycb.json plus a replay-ready registry dir under root."""
    from dataclasses import replace

    from gazebot.session import write_runtime_dir

    root = Path(root)
    scene = scene or table_scene()
    write_runtime_dir(
        root / "registry",
        table_registry_csvs(),
        scene.camera,
        activation_profiles(table_registry(), scene),
    )
    scenes = root / "scenes"
    scenes.mkdir(parents=True, exist_ok=True)
    scene = replace(scene, registry_dir="../registry")
    (scenes / "ycb.json").write_text(scene.to_json() + "\n")
    return root
