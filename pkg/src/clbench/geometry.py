"""Rigid transforms, pinhole projection and pose-track interpolation.

Coordinate conventions used throughout the package:

* Camera frame: +z forward along the optical axis, +x right, +y down
  (standard computer-vision pinhole convention).
* Ego frame: +x forward, +y left, +z up.
* City frame: fixed map-global frame, z up.
* Image frame: origin at the top-left corner, u right, v down, pixels.

An ``SE3Pose`` expresses the pose of a local frame in a parent frame:
``transform_point(pose, p_local)`` returns parent-frame coordinates
(rotation then translation).  Quaternions are stored ``(w, x, y, z)``
and kept unit-norm.

All types are immutable values; every operation is a pure function.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import (
    BehindCamera,
    EmptyTrack,
    InvariantViolation,
    NonPositiveDepth,
    OutOfRange,
)

_UNIT_NORM_TOL = 1e-9


def _frozen_vec(v, n: int, name: str) -> np.ndarray:
    a = np.array(v, dtype=np.float64).reshape(-1)
    if a.shape != (n,):
        raise InvariantViolation(f"{name} must have {n} components, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvariantViolation(f"{name} must be finite, got {a}")
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# Quaternion helpers (w, x, y, z)
# ---------------------------------------------------------------------------

def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(q))
    if n == 0.0:
        raise InvariantViolation("zero quaternion cannot be normalized")
    return np.asarray(q, dtype=np.float64) / n


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Unit quaternion (w,x,y,z) of a proper rotation matrix."""
    m = np.asarray(m, dtype=np.float64)
    t = np.trace(m)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(max(m[i, i] - m[j, j] - m[k, k] + 1.0, 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
    return quat_normalize(q)


def quat_about_axis(axis: np.ndarray, angle_rad: float) -> np.ndarray:
    """Unit quaternion rotating by ``angle_rad`` about a (not necessarily unit) axis."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle_rad
    return np.concatenate([[math.cos(half)], math.sin(half) * axis])


def slerp(q0: np.ndarray, q1: np.ndarray, u: float) -> np.ndarray:
    """Shortest-arc spherical interpolation between unit quaternions, u in [0, 1]."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    dot = min(dot, 1.0)
    if dot > 1.0 - 1e-12:
        return quat_normalize(q0 + u * (q1 - q0))
    theta = math.acos(dot)
    s = math.sin(theta)
    return quat_normalize((math.sin((1.0 - u) * theta) * q0 + math.sin(u * theta) * q1) / s)


# ---------------------------------------------------------------------------
# SE(3) poses
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SE3Pose:
    """Timestamped rigid transform: rotation ``q`` then translation ``t``."""

    timestamp_ns: int
    t: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        if self.timestamp_ns < 0:
            raise InvariantViolation(f"timestamp_ns must be >= 0, got {self.timestamp_ns}")
        object.__setattr__(self, "t", _frozen_vec(self.t, 3, "t"))
        q = _frozen_vec(self.q, 4, "q")
        if abs(float(np.linalg.norm(q)) - 1.0) > _UNIT_NORM_TOL:
            raise InvariantViolation(f"quaternion norm off unit by > {_UNIT_NORM_TOL}: {q}")
        object.__setattr__(self, "q", q)

    @staticmethod
    def identity(timestamp_ns: int = 0) -> "SE3Pose":
        return SE3Pose(timestamp_ns, np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    def rotation(self) -> np.ndarray:
        return rotation_matrix(self.q)


def compose(a: SE3Pose, b: SE3Pose) -> SE3Pose:
    """Pose of b's local frame in a's parent frame (apply b, then a)."""
    q = quat_normalize(quat_multiply(a.q, b.q))
    t = a.t + rotation_matrix(a.q) @ b.t
    return SE3Pose(a.timestamp_ns, t, q)


def invert(a: SE3Pose) -> SE3Pose:
    q = quat_conjugate(a.q)
    t = -(rotation_matrix(q) @ a.t)
    return SE3Pose(a.timestamp_ns, t, q)


def transform_point(a: SE3Pose, p) -> np.ndarray:
    """Rotation-then-translation applied to a single 3-vector."""
    p = np.asarray(p, dtype=np.float64)
    return rotation_matrix(a.q) @ p + a.t


def transform_points(a: SE3Pose, pts: np.ndarray) -> np.ndarray:
    """Vectorized ``transform_point`` over an (N, 3) array."""
    pts = np.asarray(pts, dtype=np.float64)
    return pts @ rotation_matrix(a.q).T + a.t


# ---------------------------------------------------------------------------
# Cameras
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ResizeCrop:
    """Crop (in source pixels) followed by an axis-aligned scaling."""

    crop_x0: int = 0
    crop_y0: int = 0
    crop_w: int = 0
    crop_h: int = 0
    scale_x: float = 1.0
    scale_y: float = 1.0

    def __post_init__(self):
        if self.scale_x <= 0 or self.scale_y <= 0:
            raise InvariantViolation("scale factors must be > 0")
        if self.crop_w < 0 or self.crop_h < 0 or self.crop_x0 < 0 or self.crop_y0 < 0:
            raise InvariantViolation("crop region must be non-negative")


def identity_transform(width: int, height: int) -> ResizeCrop:
    return ResizeCrop(0, 0, width, height, 1.0, 1.0)


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pinhole intrinsics, extrinsic pose of the camera in the ego frame,
    native image size and the resize/crop applied before inference."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    extrinsic: SE3Pose = field(default_factory=SE3Pose.identity)
    transform: ResizeCrop | None = None

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise InvariantViolation("focal lengths must be > 0")
        if self.width < 1 or self.height < 1:
            raise InvariantViolation("image size must be >= 1")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InvariantViolation(
                f"principal point ({self.cx}, {self.cy}) outside {self.width}x{self.height}"
            )
        if self.transform is None:
            object.__setattr__(self, "transform", identity_transform(self.width, self.height))
        tr = self.transform
        if tr.crop_w == 0 or tr.crop_h == 0:
            object.__setattr__(
                self, "transform", replace(tr, crop_w=self.width, crop_h=self.height)
            )
            tr = self.transform
        if tr.crop_x0 + tr.crop_w > self.width or tr.crop_y0 + tr.crop_h > self.height:
            raise InvariantViolation("crop region extends outside the source image")


def project(camera: CameraModel, p_cam) -> tuple[float, float]:
    """Project a camera-frame point to real-valued pixels (may be off-image)."""
    x, y, z = np.asarray(p_cam, dtype=np.float64)
    if z <= 0:
        raise BehindCamera(f"point has non-positive depth z={z}")
    return (camera.fx * x / z + camera.cx, camera.fy * y / z + camera.cy)


def project_points(camera: CameraModel, pts: np.ndarray) -> np.ndarray:
    """Vectorized projection of (N, 3) camera-frame points; caller guarantees z > 0."""
    pts = np.asarray(pts, dtype=np.float64)
    z = pts[:, 2]
    out = np.empty((pts.shape[0], 2))
    out[:, 0] = camera.fx * pts[:, 0] / z + camera.cx
    out[:, 1] = camera.fy * pts[:, 1] / z + camera.cy
    return out


def unproject(camera: CameraModel, pixel, depth_z: float) -> np.ndarray:
    """Camera-frame point of a pixel at depth ``depth_z`` along the optical axis."""
    if depth_z <= 0:
        raise NonPositiveDepth(f"depth must be > 0, got {depth_z}")
    x, y = pixel
    return np.array(
        [
            (x - camera.cx) * depth_z / camera.fx,
            (y - camera.cy) * depth_z / camera.fy,
            depth_z,
        ]
    )


def adjust_intrinsics(camera: CameraModel) -> CameraModel:
    """Camera model valid in the cropped-then-scaled image.

    Projecting with the result equals projecting with the original model and
    then applying crop-then-scale to the pixel coordinates.  The returned
    model carries an identity transform.
    """
    tr = camera.transform
    fx = camera.fx * tr.scale_x
    fy = camera.fy * tr.scale_y
    cx = (camera.cx - tr.crop_x0) * tr.scale_x
    cy = (camera.cy - tr.crop_y0) * tr.scale_y
    width = int(round(tr.crop_w * tr.scale_x))
    height = int(round(tr.crop_h * tr.scale_y))
    return CameraModel(
        fx=fx,
        fy=fy,
        cx=cx,
        cy=cy,
        width=width,
        height=height,
        extrinsic=camera.extrinsic,
        transform=identity_transform(width, height),
    )


def apply_resize_crop(tr: ResizeCrop, pixel: tuple[float, float]) -> tuple[float, float]:
    """Crop-then-scale a pixel coordinate (reference transform for tests)."""
    return ((pixel[0] - tr.crop_x0) * tr.scale_x, (pixel[1] - tr.crop_y0) * tr.scale_y)


# ---------------------------------------------------------------------------
# Pose-track interpolation
# ---------------------------------------------------------------------------

def interpolate_pose(track: Sequence[SE3Pose], t_ns: int) -> SE3Pose:
    """Pose at ``t_ns``: linear in translation, SLERP in rotation.

    ``track`` must be time-ordered with strictly increasing timestamps and
    ``t_ns`` must lie within its span; interpolation never extrapolates.
    """
    if len(track) == 0:
        raise EmptyTrack("pose track is empty")
    times = [p.timestamp_ns for p in track]
    if not (times[0] <= t_ns <= times[-1]):
        raise OutOfRange(f"t={t_ns} outside track span [{times[0]}, {times[-1]}]")
    i = bisect_left(times, t_ns)
    if times[i] == t_ns:
        p = track[i]
        return SE3Pose(t_ns, p.t, p.q)
    lo, hi = track[i - 1], track[i]
    u = (t_ns - lo.timestamp_ns) / (hi.timestamp_ns - lo.timestamp_ns)
    t = (1.0 - u) * lo.t + u * hi.t
    q = slerp(lo.q, hi.q, u)
    return SE3Pose(t_ns, t, q)
