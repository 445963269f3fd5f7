"""Deterministic procedural scenes: vector maps, ego trajectories, camera
rigs, and a crude rasterizer for trainer input images.

Randomness comes from a seeded xorshift64* generator so identical seeds
give byte-identical corpora on any platform.  Scenes are desk-scale:
straight roads, a constant-curvature arc, or one road crossing two others
with flagged intersection segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from PIL import Image, ImageDraw

from . import geometry
from .codec import FrameRef
from .errors import InvariantViolation, UnsupportedLayout
from .geometry import CameraModel, ResizeCrop, SE3Pose, quat_about_axis, quat_from_matrix
from .vectormap import LaneKind, Polyline3, VectorMap, resample_polyline

SKY_RGB = (120, 168, 224)
EARTH_RGB = (88, 116, 72)
ROAD_RGB = (58, 58, 60)
BOUNDARY_RGB = (255, 255, 255)
_Z_NEAR = 0.05


class XorShift64Star:
    """xorshift64* PRNG; tiny, portable, and stable across platforms."""

    _MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        # splitmix64 step avoids the all-zero state and decorrelates seeds
        z = (seed + 0x9E3779B97F4A7C15) & self._MASK
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        self.state = (z ^ (z >> 31)) or 1

    def next_u64(self) -> int:
        x = self.state
        x = (x ^ (x >> 12)) & self._MASK
        x = (x ^ (x << 25)) & self._MASK
        x = (x ^ (x >> 27)) & self._MASK
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & self._MASK

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * (self.next_u64() / 2.0**64)


class Layout(str, Enum):
    STRAIGHT = "straight"
    CURVE = "curve"
    GRID_WITH_INTERSECTIONS = "grid_with_intersections"


def default_camera_rig(image_w: int = 512, image_h: int = 256) -> dict[str, CameraModel]:
    """Single forward camera; native sensor is 2x the given size with a 0.5
    resize, so the adjusted model has a 90 degree horizontal FOV.

    The principal point sits 4.5 px (adjusted) off center: an exactly
    centered one would pin the straight-ahead vanishing point onto a grid
    cell boundary, making labels flicker between two columns."""
    # camera axes in ego frame: x right = -y_ego, y down = -z_ego, z fwd = +x_ego
    r = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
    extrinsic = SE3Pose(0, np.array([1.5, 0.0, 1.4]), quat_from_matrix(r))
    return {
        "cam_front": CameraModel(
            fx=float(image_w),
            fy=float(image_w),
            cx=float(image_w - 9),
            cy=float(image_h - 9),
            width=2 * image_w,
            height=2 * image_h,
            extrinsic=extrinsic,
            transform=ResizeCrop(0, 0, 2 * image_w, 2 * image_h, 0.5, 0.5),
        )
    }


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    layout: Layout = Layout.STRAIGHT
    lane_width_m: float = 3.5
    num_lanes: int = 2
    trajectory_length_m: float = 100.0
    speed_mps: float = 10.0
    frame_rate_hz: float = 10.0
    camera_rig: dict[str, CameraModel] = field(default_factory=default_camera_rig)

    def __post_init__(self):
        try:
            object.__setattr__(self, "layout", Layout(self.layout))
        except ValueError as e:
            raise UnsupportedLayout(f"unknown layout {self.layout!r}") from e
        if self.lane_width_m <= 0 or self.trajectory_length_m <= 0:
            raise InvariantViolation("scene dimensions must be > 0")
        if self.speed_mps <= 0 or self.frame_rate_hz <= 0:
            raise InvariantViolation("speed and frame rate must be > 0")
        if self.num_lanes < 1:
            raise InvariantViolation("need at least one lane")
        if not self.camera_rig:
            raise InvariantViolation("need at least one camera")


@dataclass(frozen=True, eq=False)
class SceneData:
    """Everything a generated corpus consists of (before rasterization)."""

    spec: SceneSpec
    vmap: VectorMap
    track: list[SE3Pose]
    frames: list[FrameRef]
    cameras: dict[str, CameraModel]
    # axis-aligned (x0, y0, x1, y1) city-frame boxes, grid layout only
    intersection_boxes: list[tuple[float, float, float, float]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Scene construction
# ---------------------------------------------------------------------------

def _rot2(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _straight_polyline(x_lo: float, x_hi: float, y: float, step: float = 5.0) -> np.ndarray:
    n = max(2, int(math.ceil((x_hi - x_lo) / step)) + 1)
    xs = np.linspace(x_lo, x_hi, n)
    pts = np.zeros((n, 3))
    pts[:, 0] = xs
    pts[:, 1] = y
    return pts


def _place(pts: np.ndarray, rot: np.ndarray, offset: np.ndarray) -> np.ndarray:
    out = pts.copy()
    out[:, :2] = pts[:, :2] @ rot.T + offset
    return out


def generate_scene(spec: SceneSpec) -> SceneData:
    """Build the vector map, dense ego pose track, frame list and camera rig.

    The pose track is sampled at three times the frame rate and frames sit
    between pose samples, so labeling always interpolates.
    """
    rng = XorShift64Star(spec.seed)
    layout = spec.layout
    if layout is Layout.STRAIGHT:
        scene = _gen_straight(spec, rng)
    elif layout is Layout.CURVE:
        scene = _gen_curve(spec, rng)
    elif layout is Layout.GRID_WITH_INTERSECTIONS:
        scene = _gen_grid(spec, rng)
    else:  # pragma: no cover - Layout() coercion precludes this
        raise UnsupportedLayout(f"layout {layout!r} not implemented")
    return scene


def _timeline(spec: SceneSpec) -> tuple[list[int], list[FrameRef]]:
    """Pose sample times (ns) and frame refs between them."""
    frame_dt = round(1e9 / spec.frame_rate_hz)
    pose_dt = round(1e9 / (3.0 * spec.frame_rate_hz))
    num_frames = int(math.floor(spec.trajectory_length_m / spec.speed_mps * spec.frame_rate_hz + 1e-9)) + 1
    frames = [FrameRef(f"{m:06d}", pose_dt // 2 + m * frame_dt) for m in range(num_frames)]
    last = frames[-1].timestamp_ns
    pose_times = list(range(0, last + 2 * pose_dt, pose_dt))
    return pose_times, frames


def _ego_track(
    spec: SceneSpec,
    pose_times: list[int],
    position_at: Callable[[float], np.ndarray],
    heading_at: Callable[[float], float],
) -> list[SE3Pose]:
    track = []
    for t_ns in pose_times:
        u = spec.speed_mps * (t_ns / 1e9)
        pos = position_at(u)
        yaw = heading_at(u)
        track.append(SE3Pose(t_ns, pos, quat_about_axis(np.array([0.0, 0.0, 1.0]), yaw)))
    return track


def _gen_straight(spec: SceneSpec, rng: XorShift64Star) -> SceneData:
    theta = rng.uniform(0.0, 2.0 * math.pi)
    offset = np.array([rng.uniform(-200.0, 200.0), rng.uniform(-200.0, 200.0)])
    rot = _rot2(theta)
    lw = spec.lane_width_m
    x_lo, x_hi = -30.0, spec.trajectory_length_m + 100.0

    lanes: dict[str, Polyline3] = {}
    for k in range(spec.num_lanes):
        pts = _place(_straight_polyline(x_lo, x_hi, k * lw), rot, offset)
        lane_id = f"lane_{k}"
        lanes[lane_id] = Polyline3(pts, lane_id, LaneKind.CENTERLINE, False)
    for k in range(spec.num_lanes + 1):
        pts = _place(_straight_polyline(x_lo, x_hi, (k - 0.5) * lw), rot, offset)
        lane_id = f"bnd_{k}"
        lanes[lane_id] = Polyline3(pts, lane_id, LaneKind.BOUNDARY, False)
    vmap = VectorMap(lanes=lanes, successors={})

    fwd = rot @ np.array([1.0, 0.0])

    def position_at(u: float) -> np.ndarray:
        xy = offset + fwd * u
        return np.array([xy[0], xy[1], 0.0])

    pose_times, frames = _timeline(spec)
    track = _ego_track(spec, pose_times, position_at, lambda u: theta)
    return SceneData(spec, vmap, track, frames, dict(spec.camera_rig))


def _gen_curve(spec: SceneSpec, rng: XorShift64Star) -> SceneData:
    theta = rng.uniform(0.0, 2.0 * math.pi)
    offset = np.array([rng.uniform(-200.0, 200.0), rng.uniform(-200.0, 200.0)])
    radius = spec.trajectory_length_m * rng.uniform(1.2, 3.0)
    turn = 1.0 if rng.next_u64() % 2 == 0 else -1.0
    lw = spec.lane_width_m
    arc_margin_lo, arc_margin_hi = 30.0, spec.trajectory_length_m + 100.0

    # base frame: ego starts at origin heading +x; circle center sits to the
    # side of the start point at the ego-lane radius
    center = np.array([0.0, turn * radius])

    def arc_points(lane_radius: float, u_lo: float, u_hi: float) -> np.ndarray:
        # u is arc length along the EGO lane; all lanes share angular extent
        n = max(2, int(math.ceil((u_hi - u_lo) / 2.0)) + 1)
        us = np.linspace(u_lo, u_hi, n)
        phis = -turn * math.pi / 2.0 + turn * us / radius
        pts = np.zeros((n, 3))
        pts[:, 0] = center[0] + lane_radius * np.cos(phis)
        pts[:, 1] = center[1] + lane_radius * np.sin(phis)
        return pts

    rot = _rot2(theta)
    lanes: dict[str, Polyline3] = {}
    for k in range(spec.num_lanes):
        # lane k sits k*lw to the left of the ego lane
        r_k = radius - k * lw if turn > 0 else radius + k * lw
        pts = _place(arc_points(r_k, -arc_margin_lo, arc_margin_hi), rot, offset)
        lane_id = f"lane_{k}"
        lanes[lane_id] = Polyline3(pts, lane_id, LaneKind.CENTERLINE, False)
    for k in range(spec.num_lanes + 1):
        off = (k - 0.5) * lw
        r_k = radius - off if turn > 0 else radius + off
        pts = _place(arc_points(r_k, -arc_margin_lo, arc_margin_hi), rot, offset)
        lane_id = f"bnd_{k}"
        lanes[lane_id] = Polyline3(pts, lane_id, LaneKind.BOUNDARY, False)
    vmap = VectorMap(lanes=lanes, successors={})

    def position_at(u: float) -> np.ndarray:
        phi = -turn * math.pi / 2.0 + turn * u / radius
        xy = center + radius * np.array([math.cos(phi), math.sin(phi)])
        xy = rot @ xy + offset
        return np.array([xy[0], xy[1], 0.0])

    def heading_at(u: float) -> float:
        return theta + turn * u / radius

    pose_times, frames = _timeline(spec)
    track = _ego_track(spec, pose_times, position_at, heading_at)
    return SceneData(spec, vmap, track, frames, dict(spec.camera_rig))


def _split_at_boxes(
    xs_lo: float,
    xs_hi: float,
    cuts: list[tuple[float, float]],
    make_points: Callable[[float, float], np.ndarray],
    lane_base: str,
    kind: LaneKind,
    lanes: dict[str, Polyline3],
    successors: dict[str, list[str]],
    emit_inside: bool,
) -> None:
    """Split the 1D span [xs_lo, xs_hi] at the cut intervals, emitting
    outside pieces (and inside pieces flagged as intersections when asked)."""
    pieces: list[tuple[float, float, bool]] = []
    pos = xs_lo
    for lo, hi in sorted(cuts):
        if hi <= xs_lo or lo >= xs_hi:
            continue
        if lo > pos:
            pieces.append((pos, lo, False))
        pieces.append((max(pos, lo), min(xs_hi, hi), True))
        pos = min(xs_hi, hi)
    if pos < xs_hi:
        pieces.append((pos, xs_hi, False))
    prev_id = None
    seg = 0
    for lo, hi, inside in pieces:
        if hi - lo < 1.0:
            continue
        if inside and not emit_inside:
            prev_id = None
            continue
        lane_id = f"{lane_base}_seg{seg}"
        seg += 1
        lanes[lane_id] = Polyline3(make_points(lo, hi), lane_id, kind, inside)
        if prev_id is not None:
            successors.setdefault(prev_id, []).append(lane_id)
        prev_id = lane_id


def _gen_grid(spec: SceneSpec, rng: XorShift64Star) -> SceneData:
    # axis-aligned so intersection boxes stay simple; jitter via offset only
    offset = np.array([rng.uniform(-200.0, 200.0), rng.uniform(-200.0, 200.0)])
    lw = spec.lane_width_m
    nl = spec.num_lanes
    length = spec.trajectory_length_m
    x_lo, x_hi = -30.0, length + 100.0
    y_lo, y_hi = -80.0, 80.0
    lat_lo, lat_hi = -0.5 * lw, (nl - 0.5) * lw  # lateral extent of any road

    cross_x = [
        offset[0] + length * rng.uniform(0.28, 0.42),
        offset[0] + length * rng.uniform(0.55, 0.75),
    ]
    boxes = [(cx + lat_lo, offset[1] + lat_lo, cx + lat_hi, offset[1] + lat_hi) for cx in cross_x]

    lanes: dict[str, Polyline3] = {}
    successors: dict[str, list[str]] = {}

    def ew_points(y: float):
        def make(lo: float, hi: float) -> np.ndarray:
            return _place(_straight_polyline(lo - offset[0], hi - offset[0], y), np.eye(2), offset)

        return make

    def ns_points(x: float):
        def make(lo: float, hi: float) -> np.ndarray:
            pts = _straight_polyline(lo - offset[1], hi - offset[1], 0.0)
            out = np.zeros_like(pts)
            out[:, 0] = x
            out[:, 1] = pts[:, 0] + offset[1]
            return out

        return make

    x_cuts = [(b[0], b[2]) for b in boxes]
    y_cut = [(boxes[0][1], boxes[0][3])]
    for k in range(nl):
        _split_at_boxes(
            offset[0] + x_lo, offset[0] + x_hi, x_cuts, ew_points(k * lw),
            f"ew_lane_{k}", LaneKind.CENTERLINE, lanes, successors, emit_inside=True,
        )
    for k in range(nl + 1):
        _split_at_boxes(
            offset[0] + x_lo, offset[0] + x_hi, x_cuts, ew_points((k - 0.5) * lw),
            f"ew_bnd_{k}", LaneKind.BOUNDARY, lanes, successors, emit_inside=False,
        )
    for r, cx in enumerate(cross_x):
        for k in range(nl):
            _split_at_boxes(
                offset[1] + y_lo, offset[1] + y_hi, y_cut, ns_points(cx + k * lw),
                f"ns{r}_lane_{k}", LaneKind.CENTERLINE, lanes, successors, emit_inside=True,
            )
        for k in range(nl + 1):
            _split_at_boxes(
                offset[1] + y_lo, offset[1] + y_hi, y_cut, ns_points(cx + (k - 0.5) * lw),
                f"ns{r}_bnd_{k}", LaneKind.BOUNDARY, lanes, successors, emit_inside=False,
            )
    vmap = VectorMap(lanes=lanes, successors=successors)

    def position_at(u: float) -> np.ndarray:
        return np.array([offset[0] + u, offset[1], 0.0])

    pose_times, frames = _timeline(spec)
    track = _ego_track(spec, pose_times, position_at, lambda u: 0.0)
    return SceneData(spec, vmap, track, frames, dict(spec.camera_rig), boxes)


# ---------------------------------------------------------------------------
# Rasterization
# ---------------------------------------------------------------------------

def _clip_polygon_znear(pts_cam: np.ndarray, z_near: float = _Z_NEAR) -> np.ndarray:
    """Sutherland-Hodgman clip of a camera-frame polygon against z >= z_near."""
    out: list[np.ndarray] = []
    n = pts_cam.shape[0]
    for k in range(n):
        a = pts_cam[k]
        b = pts_cam[(k + 1) % n]
        a_in = a[2] >= z_near
        b_in = b[2] >= z_near
        if a_in:
            out.append(a)
        if a_in != b_in:
            t = (z_near - a[2]) / (b[2] - a[2])
            out.append(a + t * (b - a))
    return np.array(out) if out else np.empty((0, 3))


def _clip_segment_znear(a: np.ndarray, b: np.ndarray, z_near: float = _Z_NEAR):
    a_in, b_in = a[2] >= z_near, b[2] >= z_near
    if not a_in and not b_in:
        return None
    if a_in and b_in:
        return a, b
    t = (z_near - a[2]) / (b[2] - a[2])
    mid = a + t * (b - a)
    return (a, mid) if a_in else (mid, b)


def rasterize_frame(
    vmap: VectorMap,
    camera: CameraModel,
    pose: SE3Pose,
    size: tuple[int, int],
    road_width_m: float = 3.5,
) -> Image.Image:
    """Crude deterministic render: flat sky, earth below the horizon, dark
    gray road strips around every centerline, white 2 px boundary lines.

    ``size`` is (width, height) and must match the camera's adjusted image.
    """
    adjusted = geometry.adjust_intrinsics(camera)
    if (adjusted.width, adjusted.height) != size:
        raise InvariantViolation(
            f"requested {size} does not match adjusted camera "
            f"({adjusted.width}, {adjusted.height})"
        )
    w, h = size
    cam_in_city = geometry.compose(pose, camera.extrinsic)
    cam_from_city = geometry.invert(cam_in_city)

    img = Image.new("RGB", (w, h), SKY_RGB)
    draw = ImageDraw.Draw(img)

    # horizon: where the ground plane far along the optical axis projects
    z_axis_city = geometry.rotation_matrix(cam_in_city.q)[:, 2]
    horiz = np.array([z_axis_city[0], z_axis_city[1], 0.0])
    norm = np.linalg.norm(horiz)
    if norm > 1e-9:
        far_city = np.array(
            [cam_in_city.t[0] + horiz[0] / norm * 1e6, cam_in_city.t[1] + horiz[1] / norm * 1e6, 0.0]
        )
        far_cam = geometry.transform_point(cam_from_city, far_city)
        if far_cam[2] > 0:
            _, v = geometry.project(adjusted, far_cam)
            v = int(max(0, min(h, math.ceil(v))))
            draw.rectangle([0, v, w, h], fill=EARTH_RGB)

    def to_cam(pts: np.ndarray) -> np.ndarray:
        return geometry.transform_points(cam_from_city, pts)

    for lane in vmap.centerlines():
        pts = resample_polyline(lane, 2.0).points
        d = np.diff(pts[:, :2], axis=0)
        d = np.vstack([d, d[-1]])
        nrm = np.linalg.norm(d, axis=1, keepdims=True)
        nrm[nrm == 0] = 1.0
        d = d / nrm
        normal = np.stack([-d[:, 1], d[:, 0]], axis=1) * (road_width_m / 2.0)
        left = pts.copy()
        left[:, :2] += normal
        right = pts.copy()
        right[:, :2] -= normal
        left_cam = to_cam(left)
        right_cam = to_cam(right)
        for k in range(pts.shape[0] - 1):
            quad = np.array([left_cam[k], left_cam[k + 1], right_cam[k + 1], right_cam[k]])
            clipped = _clip_polygon_znear(quad)
            if clipped.shape[0] < 3:
                continue
            px = geometry.project_points(adjusted, clipped)
            if np.any(px[:, 0] < -4 * w) or np.any(px[:, 0] > 5 * w):
                continue  # wildly off-screen quads (nearly edge-on) add noise
            draw.polygon([(float(x), float(y)) for x, y in px], fill=ROAD_RGB)

    for lane in vmap.boundaries():
        pts_cam = to_cam(lane.points)
        for k in range(pts_cam.shape[0] - 1):
            seg = _clip_segment_znear(pts_cam[k], pts_cam[k + 1])
            if seg is None:
                continue
            a = geometry.project(adjusted, seg[0])
            b = geometry.project(adjusted, seg[1])
            draw.line([a, b], fill=BOUNDARY_RGB, width=2)
    return img
