"""In-memory vector-map model: lanes as 3D polylines with connectivity.

Lane centerlines and boundaries are city-frame polylines.  The map is
immutable after construction and safe to share read-only across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvariantViolation

# Consecutive polyline points must be farther apart than this (meters).
MIN_POINT_SEPARATION_M = 1e-6


class LaneKind(str, Enum):
    CENTERLINE = "centerline"
    BOUNDARY = "boundary"


@dataclass(frozen=True, eq=False)
class Polyline3:
    """Ordered 3D polyline (>= 2 points, meters, city frame)."""

    points: np.ndarray
    lane_id: str
    kind: LaneKind = LaneKind.CENTERLINE
    is_intersection: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
            raise InvariantViolation(
                f"lane {self.lane_id!r}: polyline needs >= 2 points of dim 3, got shape {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise InvariantViolation(f"lane {self.lane_id!r}: non-finite coordinates")
        steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(steps <= MIN_POINT_SEPARATION_M):
            raise InvariantViolation(
                f"lane {self.lane_id!r}: consecutive points closer than {MIN_POINT_SEPARATION_M} m"
            )
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "kind", LaneKind(self.kind))

    def arc_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


@dataclass(frozen=True, eq=False)
class VectorMap:
    """Lanes keyed by id (iteration preserves insertion order) plus successor links."""

    lanes: dict[str, Polyline3]
    successors: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        for lane_id, lane in self.lanes.items():
            if lane.lane_id != lane_id:
                raise InvariantViolation(
                    f"lane key {lane_id!r} does not match polyline id {lane.lane_id!r}"
                )
        for lane_id, succs in self.successors.items():
            if lane_id not in self.lanes:
                raise InvariantViolation(f"successor entry for unknown lane {lane_id!r}")
            for s in succs:
                if s not in self.lanes:
                    raise InvariantViolation(
                        f"lane {lane_id!r} lists dangling successor {s!r}"
                    )

    def centerlines(self) -> list[Polyline3]:
        return [p for p in self.lanes.values() if p.kind is LaneKind.CENTERLINE]

    def boundaries(self) -> list[Polyline3]:
        return [p for p in self.lanes.values() if p.kind is LaneKind.BOUNDARY]


def cumulative_lengths(points: np.ndarray) -> np.ndarray:
    """Arc length from the first vertex to each vertex, shape (N,)."""
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def resample_polyline(p: Polyline3, spacing_m: float) -> Polyline3:
    """Uniform arc-length resampling of a polyline.

    Output vertices sit at every multiple of ``spacing_m`` along the curve
    plus every original vertex, so the result traces the input exactly
    (total arc length preserved) and consecutive points are at most
    ``spacing_m`` apart.  Multiples that fall within ``MIN_POINT_SEPARATION_M``
    of a retained vertex are dropped to keep points distinct.
    """
    if spacing_m <= 0:
        raise InvariantViolation(f"spacing must be > 0, got {spacing_m}")
    cum = cumulative_lengths(p.points)
    total = cum[-1]
    n_mult = int(np.floor(total / spacing_m))
    multiples = spacing_m * np.arange(1, n_mult + 1)
    multiples = multiples[multiples < total]
    if multiples.size:
        # distance from each multiple to the nearest original vertex position
        idx = np.searchsorted(cum, multiples)
        left = np.abs(multiples - cum[np.clip(idx - 1, 0, len(cum) - 1)])
        right = np.abs(cum[np.clip(idx, 0, len(cum) - 1)] - multiples)
        multiples = multiples[np.minimum(left, right) > MIN_POINT_SEPARATION_M]
    positions = np.sort(np.concatenate([cum, multiples]))
    out = np.empty((positions.size, 3))
    for axis in range(3):
        out[:, axis] = np.interp(positions, cum, p.points[:, axis])
    return Polyline3(out, p.lane_id, p.kind, p.is_intersection)


def clip_index_ranges(points: np.ndarray, ego_xy, radius_m: float) -> list[tuple[int, int]]:
    """Half-open index ranges of maximal point runs within ``radius_m``
    (horizontal xy distance) of ``ego_xy``."""
    if radius_m <= 0:
        raise InvariantViolation(f"radius must be > 0, got {radius_m}")
    ego_xy = np.asarray(ego_xy, dtype=np.float64)
    d = np.hypot(points[:, 0] - ego_xy[0], points[:, 1] - ego_xy[1])
    return mask_runs(d <= radius_m)


def clip_to_horizon(p: Polyline3, ego_xy, radius_m: float) -> list[Polyline3]:
    """Split a polyline into maximal runs of points within ``radius_m``
    (horizontal distance) of ``ego_xy``; runs shorter than 2 points are dropped."""
    runs = []
    for start, stop in clip_index_ranges(p.points, ego_xy, radius_m):
        if stop - start >= 2:
            runs.append(Polyline3(p.points[start:stop], p.lane_id, p.kind, p.is_intersection))
    return runs


def mask_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, stop) index ranges of consecutive True values."""
    if mask.size == 0:
        return []
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[::2], edges[1::2]))
