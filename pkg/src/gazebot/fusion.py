"""Fuse per-frame marker observations into one pose per visible button.

Each observed parent marker yields a candidate button pose (marker pose
composed with the stored marker-to-button offset). Candidates are averaged
with weights inversely proportional to a power of the offset distance, so
markers printed close to a button dominate its estimate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from gazebot.geometry import (
    DegenerateAverageError,
    Pose,
    compose,
    weighted_mean_positions,
    weighted_mean_quaternions,
)
from gazebot.registry import Registry

log = logging.getLogger(__name__)

# Default distance exponent; empirically a good trade-off between the
# influence of close and distant markers.
DEFAULT_EXPONENT = 2.0

# Offsets shorter than this use the cap weight instead of 1/|P|^n, so a
# button co-located with its marker dominates without producing infinities.
MIN_OFFSET_DISTANCE = 1e-4
MAX_WEIGHT = 1e8


@dataclass(frozen=True)
class MarkerObservation:
    """One detected fiducial: its pose in the camera frame at time t (ms)."""

    marker_id: int
    pose: Pose
    t: float


@dataclass(frozen=True)
class FusedButtonPose:
    button_id: str
    pose: Pose  # button pose in the camera frame
    n_candidates: int


def candidate_pose(obs: MarkerObservation, offset: Pose) -> Pose:
    """Button pose in the camera frame as seen through one parent marker."""
    return compose(obs.pose, offset)


def fusion_weight(offset_position, n: float = DEFAULT_EXPONENT) -> float:
    """Weight of a candidate: 1 / |offset|^n, capped near zero distance."""
    d = float(np.linalg.norm(np.asarray(offset_position, dtype=float)))
    if d < MIN_OFFSET_DISTANCE:
        return MAX_WEIGHT
    return 1.0 / d**n


def fuse_frame(
    observations: list[MarkerObservation],
    registry: Registry,
    n: float = DEFAULT_EXPONENT,
) -> list[FusedButtonPose]:
    """One fused pose per button with at least one observed parent.

    Duplicate marker ids in a frame keep the last observation (streaming
    semantics). With a single visible parent the candidate is passed through
    bit-for-bit; averaging only happens across two or more candidates.
    Output is sorted by button_id. A button whose rotation average is
    degenerate is dropped from the frame with a diagnostic.
    """
    latest: dict[int, MarkerObservation] = {}
    for obs in observations:
        latest[obs.marker_id] = obs

    fused: list[FusedButtonPose] = []
    for button_id in registry.button_ids():
        button = registry.buttons[button_id]
        candidates: list[Pose] = []
        weights: list[float] = []
        for marker_id, offset in button.parents:
            obs = latest.get(marker_id)
            if obs is None:
                continue
            candidates.append(candidate_pose(obs, offset))
            weights.append(fusion_weight(offset.position, n))
        if not candidates:
            continue
        if len(candidates) == 1:
            fused.append(FusedButtonPose(button_id, candidates[0], 1))
            continue
        position = weighted_mean_positions([c.position for c in candidates], weights)
        try:
            rotation = weighted_mean_quaternions([c.rotation for c in candidates], weights)
        except DegenerateAverageError:
            log.warning("degenerate rotation average for button %s; dropped", button_id)
            continue
        fused.append(FusedButtonPose(button_id, Pose(position, rotation), len(candidates)))
    return fused
