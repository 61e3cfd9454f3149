"""Static interface description: markers, buttons, offsets and action bindings.

The layout lives in three CSV files, loaded once before a run and immutable
afterwards:

* ``markers.csv``  -- ``marker_id,edge_length_m``
* ``buttons.csv``  -- ``button_id,kind,action,face_hx_m,face_hy_m,zone_hx_m,zone_hy_m``
* ``offsets.csv``  -- ``button_id,marker_id,px_m,py_m,pz_m,qw,qx,qy,qz``

One offsets row per (button, marker) parent pair; a button may have several
parent markers. All numeric fields are decimal with a dot separator; lengths
are meters. Action values: ``+x -x +y -y +z -z`` bind a signed world axis,
``open``/``close`` drive the gripper, ``event:<name>`` emits a custom event.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gazebot.geometry import Pose, Quaternion

BUTTONS_HEADER = ["button_id", "kind", "action", "face_hx_m", "face_hy_m", "zone_hx_m", "zone_hy_m"]
OFFSETS_HEADER = ["button_id", "marker_id", "px_m", "py_m", "pz_m", "qw", "qx", "qy", "qz"]
MARKERS_HEADER = ["marker_id", "edge_length_m"]

AXES = ("x", "y", "z")
KINDS = ("discrete", "continuous")


class RegistryError(ValueError):
    """Malformed or inconsistent layout tables; message carries the file/line."""


@dataclass(frozen=True)
class MarkerDef:
    marker_id: int
    edge_length: float


@dataclass(frozen=True)
class ActionBinding:
    """What a button does: a signed axis, a gripper verb, or a named event."""

    kind: str  # "axis" | "gripper" | "event"
    axis: str | None = None  # for axis bindings: "x" | "y" | "z"
    direction: int = 0  # +1 or -1 for axis bindings
    name: str | None = None  # gripper verb or event name

    @staticmethod
    def parse(text: str) -> "ActionBinding":
        text = text.strip()
        if len(text) == 2 and text[0] in "+-" and text[1] in AXES:
            return ActionBinding("axis", axis=text[1], direction=+1 if text[0] == "+" else -1)
        if text in ("open", "close"):
            return ActionBinding("gripper", name=text)
        if text.startswith("event:") and len(text) > 6:
            return ActionBinding("event", name=text[6:])
        raise ValueError(f"unknown action {text!r}")


@dataclass(frozen=True)
class ZoneCorners:
    """Four coplanar corners in the button-local z=0 plane, CCW about +z."""

    corners: np.ndarray  # (4, 3)

    @staticmethod
    def from_half_extent(hx: float, hy: float) -> "ZoneCorners":
        return ZoneCorners(
            np.array(
                [
                    [-hx, -hy, 0.0],
                    [hx, -hy, 0.0],
                    [hx, hy, 0.0],
                    [-hx, hy, 0.0],
                ]
            )
        )


@dataclass(frozen=True)
class ButtonDef:
    button_id: str
    kind: str  # "discrete" | "continuous"
    action: ActionBinding
    face_half_extent: tuple[float, float]
    zone_half_extent: tuple[float, float]
    parents: tuple[tuple[int, Pose], ...]  # (marker_id, button pose in marker frame)

    @property
    def zone_corners(self) -> ZoneCorners:
        return ZoneCorners.from_half_extent(*self.zone_half_extent)


@dataclass(frozen=True)
class Registry:
    markers: dict[int, MarkerDef]
    buttons: dict[str, ButtonDef]

    def button_ids(self) -> list[str]:
        return sorted(self.buttons)

    def corners_of(self, button_id: str) -> ZoneCorners:
        if button_id not in self.buttons:
            raise RegistryError(f"unknown button {button_id!r}")
        return self.buttons[button_id].zone_corners

    def axis_buttons(self) -> dict[tuple[str, int], str]:
        """Map (axis, direction) -> button_id for all axis bindings."""
        out = {}
        for b in self.buttons.values():
            if b.action.kind == "axis":
                out[(b.action.axis, b.action.direction)] = b.button_id
        return out

    def gripper_buttons(self) -> dict[str, str]:
        """Map button_id -> gripper verb ("open"/"close")."""
        return {
            b.button_id: b.action.name
            for b in self.buttons.values()
            if b.action.kind == "gripper"
        }


def _rows(table: str, header: list[str], name: str):
    reader = csv.reader(io.StringIO(table))
    try:
        first = next(reader)
    except StopIteration:
        raise RegistryError(f"{name}: empty file") from None
    if [h.strip() for h in first] != header:
        raise RegistryError(f"{name} line 1: expected header {','.join(header)}")
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise RegistryError(f"{name} line {lineno}: expected {len(header)} fields, got {len(row)}")
        yield lineno, [cell.strip() for cell in row]


def _parse_float(cell: str, name: str, lineno: int, field: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise RegistryError(f"{name} line {lineno}: bad number for {field}: {cell!r}") from None


def _parse_int(cell: str, name: str, lineno: int, field: str) -> int:
    try:
        return int(cell)
    except ValueError:
        raise RegistryError(f"{name} line {lineno}: bad integer for {field}: {cell!r}") from None


def load_registry(marker_table: str, button_table: str, offset_table: str) -> Registry:
    """Parse and cross-validate the three layout tables.

    Pure function of the file contents: identical bytes yield an identical
    registry, which is what makes session replay bit-exact.
    """
    markers: dict[int, MarkerDef] = {}
    for lineno, row in _rows(marker_table, MARKERS_HEADER, "markers.csv"):
        mid = _parse_int(row[0], "markers.csv", lineno, "marker_id")
        edge = _parse_float(row[1], "markers.csv", lineno, "edge_length_m")
        if mid < 0:
            raise RegistryError(f"markers.csv line {lineno}: marker_id must be non-negative")
        if mid in markers:
            raise RegistryError(f"markers.csv line {lineno}: duplicate marker_id {mid}")
        if edge <= 0:
            raise RegistryError(f"markers.csv line {lineno}: edge_length_m must be positive")
        markers[mid] = MarkerDef(mid, edge)

    parents: dict[str, list[tuple[int, Pose]]] = {}
    for lineno, row in _rows(offset_table, OFFSETS_HEADER, "offsets.csv"):
        bid = row[0]
        mid = _parse_int(row[1], "offsets.csv", lineno, "marker_id")
        if mid not in markers:
            raise RegistryError(f"offsets.csv line {lineno}: unknown marker {mid}")
        vals = [_parse_float(c, "offsets.csv", lineno, f) for c, f in zip(row[2:], OFFSETS_HEADER[2:])]
        try:
            pose = Pose(np.array(vals[0:3]), Quaternion(*vals[3:7]))
        except ValueError as e:
            raise RegistryError(f"offsets.csv line {lineno}: {e}") from None
        entry = parents.setdefault(bid, [])
        if any(m == mid for m, _ in entry):
            raise RegistryError(f"offsets.csv line {lineno}: duplicate parent {mid} for button {bid!r}")
        entry.append((mid, pose))

    buttons: dict[str, ButtonDef] = {}
    axis_owners: dict[tuple[str, int], str] = {}
    for lineno, row in _rows(button_table, BUTTONS_HEADER, "buttons.csv"):
        bid, kind, action_text = row[0], row[1], row[2]
        if bid in buttons:
            raise RegistryError(f"buttons.csv line {lineno}: duplicate button_id {bid!r}")
        if kind not in KINDS:
            raise RegistryError(f"buttons.csv line {lineno}: kind must be one of {KINDS}")
        try:
            action = ActionBinding.parse(action_text)
        except ValueError as e:
            raise RegistryError(f"buttons.csv line {lineno}: {e}") from None
        if action.kind == "axis":
            key = (action.axis, action.direction)
            if key in axis_owners:
                raise RegistryError(
                    f"buttons.csv line {lineno}: axis {action_text} already bound to "
                    f"{axis_owners[key]!r}"
                )
            axis_owners[key] = bid
        fhx, fhy, zhx, zhy = (
            _parse_float(c, "buttons.csv", lineno, f) for c, f in zip(row[3:], BUTTONS_HEADER[3:])
        )
        if min(fhx, fhy, zhx, zhy) <= 0:
            raise RegistryError(f"buttons.csv line {lineno}: half-extents must be positive")
        if zhx < fhx or zhy < fhy:
            raise RegistryError(
                f"buttons.csv line {lineno}: zone half-extent must cover the face"
            )
        if bid not in parents:
            raise RegistryError(f"buttons.csv line {lineno}: button {bid!r} has no parent markers")
        buttons[bid] = ButtonDef(
            button_id=bid,
            kind=kind,
            action=action,
            face_half_extent=(fhx, fhy),
            zone_half_extent=(zhx, zhy),
            parents=tuple(parents[bid]),
        )

    orphans = set(parents) - set(buttons)
    if orphans:
        raise RegistryError(f"offsets.csv: rows for undefined buttons {sorted(orphans)}")
    return Registry(markers=markers, buttons=buttons)


def load_registry_dir(path: str | Path) -> Registry:
    """Load markers.csv, buttons.csv and offsets.csv from a directory."""
    path = Path(path)
    return load_registry(
        (path / "markers.csv").read_text(),
        (path / "buttons.csv").read_text(),
        (path / "offsets.csv").read_text(),
    )
