"""Gaze-driven physical-button teleoperation runtime.

Pipeline, per input frame: marker observations are fused into button poses,
button interaction zones are projected to pixels, the gaze point is hit-tested
against them, per-button activation accumulators debounce the hits into events
and activation levels, and a servo layer turns those into Cartesian velocity
commands for the simulated end-effector.
"""

from gazebot.bench import BenchReport, OraclePolicy, ProtocolAbort, run_protocol, score_block
from gazebot.fusion import FusedButtonPose, MarkerObservation, fuse_frame, fusion_weight
from gazebot.geometry import (
    BehindCameraError,
    CameraIntrinsics,
    DegenerateAverageError,
    Pose,
    Quaternion,
    compose,
    invert,
    project_point,
    weighted_mean_positions,
    weighted_mean_quaternions,
)
from gazebot.hittest import GazeSample, ProjectedZone, gaze_hit, project_zone
from gazebot.inputs import ActivationProfile, InputEvent, InputPipeline
from gazebot.registry import Registry, RegistryError, load_registry, load_registry_dir
from gazebot.servo import ControllerConfig, ServoController, VelocityCommand
from gazebot.sim import NoiseConfig, SceneConfig, SimState, Simulator

__all__ = [
    "ActivationProfile",
    "BehindCameraError",
    "BenchReport",
    "CameraIntrinsics",
    "ControllerConfig",
    "DegenerateAverageError",
    "FusedButtonPose",
    "GazeSample",
    "InputEvent",
    "InputPipeline",
    "MarkerObservation",
    "NoiseConfig",
    "OraclePolicy",
    "Pose",
    "ProjectedZone",
    "ProtocolAbort",
    "Quaternion",
    "Registry",
    "RegistryError",
    "SceneConfig",
    "ServoController",
    "SimState",
    "Simulator",
    "VelocityCommand",
    "compose",
    "fuse_frame",
    "fusion_weight",
    "gaze_hit",
    "invert",
    "load_registry",
    "load_registry_dir",
    "project_point",
    "project_zone",
    "run_protocol",
    "score_block",
    "weighted_mean_positions",
    "weighted_mean_quaternions",
]

__version__ = "0.1.0"
