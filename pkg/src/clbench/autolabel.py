"""Grid-form label generation: pose sync, projection, filtering, quantization.

A frame label is a sparse set of key-points on a coarse ``h1 x w1`` grid.
Each key-point stores its grid cell ``(i, j)`` (row, column), a sub-cell
offset ``(ox, oy)`` in ``[0, 1]^2``, the full-resolution pixel it encodes
(``x = (j + ox) * s``, ``y = (i + oy) * s``), the camera-frame depth and
3D point, and the source lane id.

Pixels live in the half-open box ``[0, w0) x [0, h0)`` so that
``floor(x / s)`` always lands inside the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import geometry
from .errors import (
    ConfigMismatch,
    InvariantViolation,
    OutOfRange,
    PixelOutOfBounds,
    PoseOutOfRange,
)
from .geometry import CameraModel, SE3Pose
from .vectormap import (
    LaneKind,
    Polyline3,
    VectorMap,
    clip_index_ranges,
    mask_runs,
    resample_polyline,
)

PIXEL_CONSISTENCY_TOL = 1e-6


@dataclass(frozen=True)
class LabelConfig:
    """Grid geometry and the labeling filter thresholds.

    ``(h0, w0)`` is the input image size and ``(h1, w1)`` the grid size;
    they are tied by the scale factor ``s``: ``h0 = h1*s``, ``w0 = w1*s``.
    Defaults are desk-scale (256x512 input, 32x64 grid).
    """

    h1: int = 32
    w1: int = 64
    s: int = 8
    h0: int = 0  # 0 means "derive from h1 * s"
    w0: int = 0
    max_depth_m: float = 60.0
    min_points_per_segment: int = 3
    min_pixel_spacing: float = 4.0
    resample_spacing_m: float = 0.5
    min_segment_length_m: float = 3.0

    def __post_init__(self):
        if self.h1 < 1 or self.w1 < 1 or self.s < 1:
            raise InvariantViolation("grid dims and scale must be >= 1")
        if self.h0 == 0:
            object.__setattr__(self, "h0", self.h1 * self.s)
        if self.w0 == 0:
            object.__setattr__(self, "w0", self.w1 * self.s)
        if self.h0 != self.h1 * self.s or self.w0 != self.w1 * self.s:
            raise InvariantViolation(
                f"input size ({self.h0}x{self.w0}) must equal grid size "
                f"({self.h1}x{self.w1}) times s={self.s}"
            )
        for name in (
            "max_depth_m",
            "min_points_per_segment",
            "min_pixel_spacing",
            "resample_spacing_m",
            "min_segment_length_m",
        ):
            if getattr(self, name) <= 0:
                raise InvariantViolation(f"{name} must be > 0")


@dataclass(frozen=True, eq=False)
class KeyPoint:
    """One centerline key-point: grid cell plus sub-cell offset, pixel,
    camera-frame depth/3D point, and source lane id (absent for decoded
    predictions)."""

    cell: tuple[int, int]  # (i, j) = (row, column)
    offset: tuple[float, float]  # (ox, oy), fractions of a cell
    pixel: tuple[float, float]  # (x, y) in the h0 x w0 frame
    depth_m: float | None = None
    xyz_cam: np.ndarray | None = None
    lane_id: str | None = None

    def __post_init__(self):
        i, j = self.cell
        if i < 0 or j < 0:
            raise InvariantViolation(f"negative grid cell {self.cell}")
        ox, oy = self.offset
        if not (0.0 <= ox <= 1.0 and 0.0 <= oy <= 1.0):
            raise InvariantViolation(f"offset {self.offset} outside [0, 1]^2")
        if self.depth_m is not None and self.depth_m <= 0:
            raise InvariantViolation(f"depth must be > 0, got {self.depth_m}")
        if self.xyz_cam is not None:
            xyz = np.array(self.xyz_cam, dtype=np.float64).reshape(3)
            xyz.flags.writeable = False
            object.__setattr__(self, "xyz_cam", xyz)


@dataclass(frozen=True, eq=False)
class LabelGrid:
    """Per-frame ground truth: key-points in row-major cell order plus the
    derived binary confidence grid."""

    config: LabelConfig
    frame_id: str = ""
    camera_id: str = ""
    keypoints: tuple[KeyPoint, ...] = ()
    timestamp_ns: int = 0

    def __post_init__(self):
        kps = tuple(sorted(self.keypoints, key=lambda k: k.cell))
        object.__setattr__(self, "keypoints", kps)
        cfg = self.config
        seen: set[tuple[int, int]] = set()
        for kp in kps:
            i, j = kp.cell
            if not (0 <= i < cfg.h1 and 0 <= j < cfg.w1):
                raise InvariantViolation(f"cell {kp.cell} outside {cfg.h1}x{cfg.w1} grid")
            if kp.cell in seen:
                raise InvariantViolation(f"duplicate keypoint in cell {kp.cell}")
            seen.add(kp.cell)
            x, y = decode_cell(kp.cell, kp.offset, cfg.s)
            if abs(x - kp.pixel[0]) > PIXEL_CONSISTENCY_TOL or abs(y - kp.pixel[1]) > PIXEL_CONSISTENCY_TOL:
                raise InvariantViolation(
                    f"pixel {kp.pixel} inconsistent with cell/offset decode ({x}, {y})"
                )
            if kp.depth_m is not None and kp.depth_m > cfg.max_depth_m:
                raise InvariantViolation(
                    f"keypoint depth {kp.depth_m} exceeds max_depth_m={cfg.max_depth_m}"
                )

    @property
    def n_keypoints(self) -> int:
        return len(self.keypoints)

    def confidence_grid(self) -> np.ndarray:
        """Binary (h1, w1) grid with 1.0 where a key-point occupies the cell."""
        f = np.zeros((self.config.h1, self.config.w1))
        for kp in self.keypoints:
            f[kp.cell] = 1.0
        return f

    def target_grids(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Dense training targets (F, O, Z); O and Z are zero off key-point cells."""
        cfg = self.config
        f = np.zeros((cfg.h1, cfg.w1))
        o = np.zeros((cfg.h1, cfg.w1, 2))
        z = np.zeros((cfg.h1, cfg.w1))
        for kp in self.keypoints:
            f[kp.cell] = 1.0
            o[kp.cell] = kp.offset
            if kp.depth_m is not None:
                z[kp.cell] = kp.depth_m
        return f, o, z


def decode_cell(cell: tuple[int, int], offset: tuple[float, float], s: int) -> tuple[float, float]:
    """Input-scale pixel encoded by a grid cell plus offset."""
    i, j = cell
    ox, oy = offset
    return ((j + ox) * s, (i + oy) * s)


@dataclass(frozen=True, eq=False)
class ProjectedPoint:
    """A projected centerline sample prior to grid quantization."""

    pixel: tuple[float, float]
    depth_m: float
    lane_id: str = ""
    xyz_cam: np.ndarray | None = None
    index: int | None = None  # along-lane ordinal, used for deterministic tie-breaks


def quantize_to_grid(
    points: Sequence[ProjectedPoint],
    cfg: LabelConfig,
    frame_id: str = "",
    camera_id: str = "",
    timestamp_ns: int = 0,
) -> LabelGrid:
    """Snap projected points onto the grid: ``j = floor(x/s)``, ``ox = x/s - j``.

    When several points land in one cell the nearest-depth one is kept;
    ties break on smaller lane_id, then earlier along-lane index.
    """
    s = cfg.s
    best: dict[tuple[int, int], tuple[tuple[float, str, int], ProjectedPoint]] = {}
    for pos, pt in enumerate(points):
        x, y = pt.pixel
        if not (0 <= x < cfg.w0 and 0 <= y < cfg.h0):
            raise PixelOutOfBounds(f"pixel ({x}, {y}) outside [0, {cfg.w0}) x [0, {cfg.h0})")
        rank = (pt.depth_m, pt.lane_id, pos if pt.index is None else pt.index)
        j = int(math.floor(x / s))
        i = int(math.floor(y / s))
        key = (i, j)
        if key not in best or rank < best[key][0]:
            best[key] = (rank, pt)
    kps = []
    for (i, j), (_, pt) in best.items():
        x, y = pt.pixel
        ox = x / s - j
        oy = y / s - i
        kps.append(
            KeyPoint(
                cell=(i, j),
                offset=(ox, oy),
                pixel=(x, y),
                depth_m=pt.depth_m,
                xyz_cam=pt.xyz_cam,
                lane_id=pt.lane_id or None,
            )
        )
    return LabelGrid(
        config=cfg,
        frame_id=frame_id,
        camera_id=camera_id,
        keypoints=tuple(kps),
        timestamp_ns=timestamp_ns,
    )


def thin_points(pixels: np.ndarray, min_pixel_spacing: float) -> np.ndarray:
    """Greedy along-lane thinning; returns kept row indices.

    Keeps the first point, then each next point at least ``min_pixel_spacing``
    pixels (Euclidean) from the last kept one.
    """
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.shape[0] == 0:
        return np.empty(0, dtype=np.intp)
    kept = [0]
    last = pixels[0]
    for idx in range(1, pixels.shape[0]):
        if math.hypot(pixels[idx, 0] - last[0], pixels[idx, 1] - last[1]) >= min_pixel_spacing:
            kept.append(idx)
            last = pixels[idx]
    return np.asarray(kept, dtype=np.intp)


def _horizon_radius(camera: CameraModel, max_depth_m: float) -> float:
    """Horizontal distance below which every visible point within
    ``max_depth_m`` must lie (conservative pre-filter bound)."""
    rx = max(camera.cx, camera.width - camera.cx) / camera.fx
    ry = max(camera.cy, camera.height - camera.cy) / camera.fy
    return max_depth_m * math.sqrt(1.0 + rx * rx + ry * ry) * (1.0 + 1e-9) + 1e-6


def label_frame(
    vmap: VectorMap,
    camera: CameraModel,
    poses: Sequence[SE3Pose],
    t_ns: int,
    cfg: LabelConfig,
    frame_id: str = "",
    camera_id: str = "",
    resampled_cache: dict[str, Polyline3] | None = None,
) -> LabelGrid:
    """Generate the grid label for one frame.

    Pipeline: interpolate the ego pose at ``t_ns``; chain it with the camera
    extrinsic; for each non-intersection centerline resample in 3D, move to
    the camera frame and drop points behind the camera, beyond the depth
    horizon, or projecting off-image; drop short/sparse segments; thin
    densely packed projections; quantize the survivors to the grid.

    ``resampled_cache`` maps lane_id to an already-resampled polyline at
    ``cfg.resample_spacing_m`` (corpus runs resample each lane once).
    """
    try:
        ego_pose = geometry.interpolate_pose(poses, t_ns)
    except OutOfRange as e:
        raise PoseOutOfRange(str(e)) from e

    adjusted = geometry.adjust_intrinsics(camera)
    if (adjusted.width, adjusted.height) != (cfg.w0, cfg.h0):
        raise ConfigMismatch(
            f"adjusted camera image {adjusted.width}x{adjusted.height} does not match "
            f"label config {cfg.w0}x{cfg.h0}"
        )

    cam_in_city = geometry.compose(ego_pose, camera.extrinsic)
    cam_from_city = geometry.invert(cam_in_city)
    radius = _horizon_radius(adjusted, cfg.max_depth_m)

    candidates: list[ProjectedPoint] = []
    for lane in vmap.lanes.values():
        if lane.kind is not LaneKind.CENTERLINE or lane.is_intersection:
            continue
        if resampled_cache is not None and lane.lane_id in resampled_cache:
            resampled = resampled_cache[lane.lane_id]
        else:
            resampled = resample_polyline(lane, cfg.resample_spacing_m)
            if resampled_cache is not None:
                resampled_cache[lane.lane_id] = resampled
        for start, stop in clip_index_ranges(resampled.points, cam_in_city.t[:2], radius):
            pts_city = resampled.points[start:stop]
            pts_cam = geometry.transform_points(cam_from_city, pts_city)
            z = pts_cam[:, 2]
            visible = (z > 0) & (z <= cfg.max_depth_m)
            pixels = np.full((pts_cam.shape[0], 2), np.nan)
            if np.any(visible):
                pixels[visible] = geometry.project_points(adjusted, pts_cam[visible])
                visible &= (
                    (pixels[:, 0] >= 0)
                    & (pixels[:, 0] < cfg.w0)
                    & (pixels[:, 1] >= 0)
                    & (pixels[:, 1] < cfg.h0)
                )
            for seg_lo, seg_hi in mask_runs(visible):
                seg_cam = pts_cam[seg_lo:seg_hi]
                if seg_hi - seg_lo < cfg.min_points_per_segment:
                    continue
                seg_len = float(np.sum(np.linalg.norm(np.diff(seg_cam, axis=0), axis=1)))
                if seg_len < cfg.min_segment_length_m:
                    continue
                seg_px = pixels[seg_lo:seg_hi]
                for local in thin_points(seg_px, cfg.min_pixel_spacing):
                    k = seg_lo + int(local)
                    candidates.append(
                        ProjectedPoint(
                            pixel=(float(pixels[k, 0]), float(pixels[k, 1])),
                            depth_m=float(pts_cam[k, 2]),
                            lane_id=lane.lane_id,
                            xyz_cam=pts_cam[k],
                            index=start + k,
                        )
                    )
    return quantize_to_grid(
        candidates, cfg, frame_id=frame_id, camera_id=camera_id, timestamp_ns=t_ns
    )
