"""Decode prediction tensors (confidence, offset, depth) into key-points.

The decode transform is the exact inverse of grid quantization:
``x = (j + Ox) * s``, ``y = (i + Oy) * s`` for every cell whose confidence
clears the threshold.  Cells with a non-positive depth estimate decode to
2D-only key-points (no camera-frame point).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autolabel import KeyPoint, LabelConfig
from .errors import InvariantViolation, ShapeMismatch
from .geometry import CameraModel, unproject


@dataclass(frozen=True, eq=False)
class PredictionGrid:
    """Model output tensors for one frame: confidence (h1, w1) in [0, 1],
    offsets (h1, w1, 2) in [0, 1] with x before y, depths (h1, w1) meters."""

    config: LabelConfig
    conf: np.ndarray
    offset: np.ndarray
    depth: np.ndarray
    frame_id: str = ""
    camera_id: str = ""

    def __post_init__(self):
        cfg = self.config
        conf = np.array(self.conf, dtype=np.float64)
        offset = np.array(self.offset, dtype=np.float64)
        depth = np.array(self.depth, dtype=np.float64)
        if conf.shape != (cfg.h1, cfg.w1):
            raise ShapeMismatch(f"conf shape {conf.shape} != ({cfg.h1}, {cfg.w1})")
        if offset.shape != (cfg.h1, cfg.w1, 2):
            raise ShapeMismatch(f"offset shape {offset.shape} != ({cfg.h1}, {cfg.w1}, 2)")
        if depth.shape != (cfg.h1, cfg.w1):
            raise ShapeMismatch(f"depth shape {depth.shape} != ({cfg.h1}, {cfg.w1})")
        if np.any(conf < 0) or np.any(conf > 1) or np.any(offset < 0) or np.any(offset > 1):
            raise InvariantViolation("confidence/offsets must lie in [0, 1]; clamp on load")
        for name, arr in (("conf", conf), ("offset", offset), ("depth", depth)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @staticmethod
    def from_tensors(
        conf: np.ndarray,
        offset: np.ndarray,
        depth: np.ndarray,
        config: LabelConfig,
        frame_id: str = "",
        camera_id: str = "",
    ) -> "PredictionGrid":
        """Build a grid from raw tensors, clamping conf/offset into [0, 1]."""
        return PredictionGrid(
            config=config,
            conf=np.clip(np.asarray(conf, dtype=np.float64), 0.0, 1.0),
            offset=np.clip(np.asarray(offset, dtype=np.float64), 0.0, 1.0),
            depth=np.asarray(depth, dtype=np.float64),
            frame_id=frame_id,
            camera_id=camera_id,
        )


@dataclass(frozen=True)
class DecodeConfig:
    conf_threshold: float = 0.5
    # The dimensionally inconsistent variant x = j + s*Ox, kept for comparison.
    legacy_offset_formula: bool = False

    def __post_init__(self):
        if not (0.0 < self.conf_threshold < 1.0):
            raise InvariantViolation(f"conf_threshold must be in (0, 1), got {self.conf_threshold}")


def decode(pred: PredictionGrid, camera: CameraModel, dcfg: DecodeConfig) -> list[KeyPoint]:
    """Key-points for every cell with confidence >= threshold, row-major.

    Pixels are clamped into the half-open image box; depth estimates <= 0
    yield 2D-only key-points.
    """
    cfg = pred.config
    if (camera.width, camera.height) != (cfg.w0, cfg.h0):
        raise ShapeMismatch(
            f"camera image {camera.width}x{camera.height} does not match "
            f"prediction config {cfg.w0}x{cfg.h0}"
        )
    s = cfg.s
    x_hi = np.nextafter(float(cfg.w0), -np.inf)
    y_hi = np.nextafter(float(cfg.h0), -np.inf)
    keypoints: list[KeyPoint] = []
    rows, cols = np.nonzero(pred.conf >= dcfg.conf_threshold)
    for i, j in zip(rows.tolist(), cols.tolist()):
        ox, oy = pred.offset[i, j]
        if dcfg.legacy_offset_formula:
            x = j + s * ox
            y = i + s * oy
        else:
            x = (j + ox) * s
            y = (i + oy) * s
        x = min(float(x), x_hi)
        y = min(float(y), y_hi)
        z = float(pred.depth[i, j])
        if z > 0:
            depth_m = z
            xyz = unproject(camera, (x, y), z)
        else:
            depth_m = None
            xyz = None
        keypoints.append(
            KeyPoint(
                cell=(i, j),
                offset=(float(ox), float(oy)),
                pixel=(x, y),
                depth_m=depth_m,
                xyz_cam=xyz,
            )
        )
    return keypoints
