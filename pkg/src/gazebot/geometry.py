"""Rigid-transform algebra, weighted pose averaging and pinhole projection.

Conventions used across the whole package:

* A ``Pose`` maps points from its *local* frame into its *parent* frame:
  ``p_parent = R @ p_local + t``.
* ``compose(a, b)`` chains transforms so that ``compose(a, b).apply(p)``
  equals ``a.apply(b.apply(p))`` (apply ``b`` first, then ``a``).
* Quaternions are stored w-first ``(w, x, y, z)`` everywhere: in memory,
  in files and on the wire.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

UNIT_NORM_TOL = 1e-9

# Points closer to the image plane than this are treated as behind the camera.
Z_MIN = 1e-6


class BehindCameraError(ValueError):
    """Raised when projecting a point at or behind the camera plane."""


class DegenerateAverageError(ValueError):
    """Raised when a quaternion average collapses to (numerically) zero."""


@dataclass(frozen=True)
class Quaternion:
    """Unit quaternion, w-first. q and -q denote the same rotation."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        n = math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)
        if n < 1e-12:
            raise ValueError("zero-norm quaternion")
        if abs(n - 1.0) > UNIT_NORM_TOL:
            object.__setattr__(self, "w", self.w / n)
            object.__setattr__(self, "x", self.x / n)
            object.__setattr__(self, "y", self.y / n)
            object.__setattr__(self, "z", self.z / n)

    @staticmethod
    def identity() -> "Quaternion":
        return Quaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis, angle: float) -> "Quaternion":
        ax = np.asarray(axis, dtype=float)
        n = float(np.linalg.norm(ax))
        if n < 1e-12:
            raise ValueError("zero rotation axis")
        ax = ax / n
        h = 0.5 * angle
        s = math.sin(h)
        return Quaternion(math.cos(h), ax[0] * s, ax[1] * s, ax[2] * s)

    @staticmethod
    def from_rotvec(rv) -> "Quaternion":
        rv = np.asarray(rv, dtype=float)
        angle = float(np.linalg.norm(rv))
        if angle < 1e-12:
            return Quaternion.identity()
        return Quaternion.from_axis_angle(rv, angle)

    @staticmethod
    def from_matrix(m) -> "Quaternion":
        """Rotation matrix to quaternion via the largest diagonal pivot."""
        m = np.asarray(m, dtype=float).reshape(3, 3)
        t = float(np.trace(m))
        if t > 0:
            s = math.sqrt(t + 1.0) * 2.0
            return Quaternion(
                0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s
            )
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(max(0.0, m[i, i] - m[j, j] - m[k, k] + 1.0)) * 2.0
        q = [0.0, 0.0, 0.0, 0.0]
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
        return Quaternion(*q)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z], dtype=float)

    def multiply(self, other: "Quaternion") -> "Quaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def rotate(self, p) -> np.ndarray:
        """Rotate a 3-vector by this quaternion.

        q p q* expanded as p + 2 w (u x p) + 2 u x (u x p); the cross
        products are spelled out because this sits on the per-frame hot path.
        """
        px, py, pz = float(p[0]), float(p[1]), float(p[2])
        w, ux, uy, uz = self.w, self.x, self.y, self.z
        cx = uy * pz - uz * py
        cy = uz * px - ux * pz
        cz = ux * py - uy * px
        return np.array(
            [
                px + 2.0 * (w * cx + uy * cz - uz * cy),
                py + 2.0 * (w * cy + uz * cx - ux * cz),
                pz + 2.0 * (w * cz + ux * cy - uy * cx),
            ]
        )

    def as_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def angle_to(self, other: "Quaternion") -> float:
        """Rotation angle between two quaternions, sign-insensitive, in [0, pi].

        Equals 2*acos(|dot(q1, q2)|) but evaluated through atan2 of the
        relative rotation, which stays accurate for angles near zero.
        """
        r = self.conjugate().multiply(other)
        s = math.sqrt(r.x * r.x + r.y * r.y + r.z * r.z)
        return 2.0 * math.atan2(s, abs(r.w))


@dataclass(frozen=True)
class Pose:
    """Rigid transform: position in meters plus unit-quaternion rotation."""

    position: np.ndarray
    rotation: Quaternion = field(default_factory=Quaternion.identity)

    def __post_init__(self) -> None:
        p = np.asarray(self.position, dtype=float).reshape(3)
        object.__setattr__(self, "position", p)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), Quaternion.identity())

    @staticmethod
    def from_translation(x: float, y: float, z: float) -> "Pose":
        return Pose(np.array([x, y, z], dtype=float), Quaternion.identity())

    def apply(self, p) -> np.ndarray:
        """Map a point from the local frame into the parent frame."""
        return self.rotation.rotate(p) + self.position

    def almost_equal(self, other: "Pose", tol: float = UNIT_NORM_TOL) -> bool:
        return (
            float(np.linalg.norm(self.position - other.position)) <= tol
            and self.rotation.angle_to(other.rotation) <= tol
        )


def compose(a: Pose, b: Pose) -> Pose:
    """Chain two transforms: apply ``b`` first, then ``a``."""
    return Pose(a.rotation.rotate(b.position) + a.position, a.rotation.multiply(b.rotation))


def invert(p: Pose) -> Pose:
    qi = p.rotation.conjugate()
    return Pose(-qi.rotate(p.position), qi)


def weighted_mean_positions(points, weights) -> np.ndarray:
    """Weighted average of 3-vectors. Weights must be positive."""
    pts = [np.asarray(p, dtype=float).reshape(3) for p in points]
    w = [float(x) for x in weights]
    if not pts:
        raise ValueError("no points to average")
    if len(pts) != len(w):
        raise ValueError(f"{len(pts)} points but {len(w)} weights")
    if any(x <= 0.0 for x in w):
        raise ValueError("weights must be positive")
    acc = np.zeros(3)
    for p, x in zip(pts, w):
        acc += x * p
    return acc / sum(w)


def weighted_mean_quaternions(quats, weights) -> Quaternion:
    """Sign-aligned weighted arithmetic mean, renormalized to unit norm.

    Every quaternion is flipped onto the hemisphere of the first one before
    averaging, so q and -q inputs are interchangeable. Adequate for the
    small angular spreads produced by marker noise; widely-spread rotation
    sets would need the eigendecomposition average instead and raise
    DegenerateAverageError here when the mean collapses.
    """
    qs = list(quats)
    w = [float(x) for x in weights]
    if not qs:
        raise ValueError("no quaternions to average")
    if len(qs) != len(w):
        raise ValueError(f"{len(qs)} quaternions but {len(w)} weights")
    if any(x <= 0.0 for x in w):
        raise ValueError("weights must be positive")
    ref = qs[0].as_array()
    acc = np.zeros(4)
    for q, x in zip(qs, w):
        v = q.as_array()
        if float(np.dot(v, ref)) < 0.0:
            v = -v
        acc += x * v
    acc /= sum(w)
    n = float(np.linalg.norm(acc))
    if n < 1e-12:
        raise DegenerateAverageError("quaternion average is degenerate (antipodal inputs)")
    acc /= n
    return Quaternion(acc[0], acc[1], acc[2], acc[3])


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters in pixels; no distortion model."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise ValueError("principal point outside image")


def project_point(k: CameraIntrinsics, p) -> np.ndarray:
    """Project a camera-frame point to pixel coordinates (u, v).

    Applies the perspective division u = fx*x/z + cx, v = fy*y/z + cy.
    """
    p = np.asarray(p, dtype=float).reshape(3)
    if p[2] <= Z_MIN:
        raise BehindCameraError(f"point at z={p[2]:.3g} m is behind the camera")
    return np.array([k.fx * p[0] / p[2] + k.cx, k.fy * p[1] / p[2] + k.cy])
