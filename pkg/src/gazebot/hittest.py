"""Project interaction rectangles into pixel space and hit-test the gaze point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gazebot.fusion import FusedButtonPose
from gazebot.geometry import BehindCameraError, CameraIntrinsics, project_point
from gazebot.registry import ZoneCorners

# Below one square pixel the zone cannot be fixated deliberately.
MIN_ZONE_AREA_PX2 = 1.0


@dataclass(frozen=True)
class ProjectedZone:
    button_id: str
    quad: np.ndarray  # (4, 2) pixel corners, order preserved from ZoneCorners
    visible: bool

    @property
    def centroid(self) -> np.ndarray:
        return self.quad.mean(axis=0)


@dataclass(frozen=True)
class GazeSample:
    u: float
    v: float
    t: float  # ms
    valid: bool = True


def quad_area(quad: np.ndarray) -> float:
    """Unsigned shoelace area of a quad in px^2."""
    total = 0.0
    for i in range(4):
        x0, y0 = quad[i]
        x1, y1 = quad[(i + 1) % 4]
        total += x0 * y1 - x1 * y0
    return 0.5 * abs(total)


def project_zone(
    fused: FusedButtonPose, corners: ZoneCorners, k: CameraIntrinsics
) -> ProjectedZone:
    """Project the zone's corners through the fused button pose.

    Any corner behind the camera, or a projected area under one square
    pixel (edge-on button), marks the zone not visible.
    """
    quad = np.zeros((4, 2))
    for i, corner in enumerate(corners.corners):
        try:
            quad[i] = project_point(k, fused.pose.apply(corner))
        except BehindCameraError:
            return ProjectedZone(fused.button_id, quad, visible=False)
    if quad_area(quad) < MIN_ZONE_AREA_PX2:
        return ProjectedZone(fused.button_id, quad, visible=False)
    return ProjectedZone(fused.button_id, quad, visible=True)


def point_in_convex_quad(point: np.ndarray, quad: np.ndarray) -> bool:
    """Boundary-inclusive containment test for a convex quad, any winding.

    The point is inside iff it is not strictly on the outside of any edge,
    i.e. all edge cross products share a sign (zeros allowed).
    """
    pos = neg = False
    for i in range(4):
        a = quad[i]
        b = quad[(i + 1) % 4]
        cross = (b[0] - a[0]) * (point[1] - a[1]) - (b[1] - a[1]) * (point[0] - a[0])
        if cross > 0:
            pos = True
        elif cross < 0:
            neg = True
        if pos and neg:
            return False
    return True


def gaze_hit(zone: ProjectedZone, gaze: GazeSample) -> bool:
    """True iff a valid gaze sample lands in a visible zone (boundary counts).

    Overlapping zones can all report a hit for the same sample; arbitration
    between simultaneous hits is input-pipeline policy, not geometry.
    """
    if not zone.visible or not gaze.valid:
        return False
    return point_in_convex_quad(np.array([gaze.u, gaze.v]), zone.quad)
