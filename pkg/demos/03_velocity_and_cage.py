"""
Antagonistic velocity control and the virtual cage
==================================================

Opposing buttons on each axis command signed velocity: per axis,
v = v_ref * (a_positive - a_negative), counting only buttons whose
debounced status is active. A virtual cage shortens any step that would
cross a wall so the effector lands exactly on the boundary and can still
slide along it.
"""

import numpy as np

from gazebot import presets
from gazebot.inputs import ACTIVE, INACTIVE, ActivationSnapshot
from gazebot.servo import apply_cage, compute_velocity

registry = presets.table_registry()
config = presets.controller_config(presets.table_scene())


def snapshot(**levels):
    entries = tuple(
        sorted((bid, a, ACTIVE if active else INACTIVE) for bid, (a, active) in levels.items())
    )
    return ActivationSnapshot(t=0.0, entries=entries)


############################################################
# The velocity law

cases = {
    "full left": snapshot(move_left=(1.0, True)),
    "left vs right tug of war": snapshot(move_left=(0.8, True), move_right=(0.8, True)),
    "half up, down not yet active": snapshot(move_up=(0.5, True), move_down=(0.9, False)),
    "diagonal": snapshot(move_left=(1.0, True), move_closer=(0.5, True)),
}
for name, snap in cases.items():
    v = compute_velocity(snap, registry, config)
    print(f"{name:32s} -> v = [{v[0]:+.3f} {v[1]:+.3f} {v[2]:+.3f}] m/s")

############################################################
# Driving into a cage wall: the step is clipped, then held at zero

print("\napproaching the +x wall at full speed:")
pos = np.array([config.cage_max[0] - 0.004, 0.0, 0.16])
for tick in range(5):
    v = apply_cage(pos, [0.1, 0.0, 0.0], 0.02, config)
    pos = pos + np.asarray(v) * 0.02
    print(f"tick {tick}: v_x = {v[0]:.4f} m/s, x = {pos[0]:.6f} m (wall at {config.cage_max[0]})")
