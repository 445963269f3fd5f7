"""Corpus loading: label JSON + PNG images + calibration JSON.

The trainer consumes the labeling toolkit's on-disk formats directly.
Each sample pairs an image with dense grid targets built from the label
file's key-points (binary confidence, per-cell offsets and depths) plus
the adjusted pinhole intrinsics of its camera.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class GridConfig:
    h0: int
    w0: int
    h1: int
    w1: int
    s: int


@dataclass(frozen=True)
class Intrinsics:
    """Adjusted (post resize/crop) pinhole parameters."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int


@dataclass
class Sample:
    frame_id: str
    camera_id: str
    image: np.ndarray  # (3, h0, w0) float32 in [0, 1]
    f: np.ndarray  # (h1, w1) float32 binary
    o: np.ndarray  # (2, h1, w1) float32
    z: np.ndarray  # (h1, w1) float32
    intrinsics: Intrinsics


def load_calibration(path: Path | str) -> dict[str, Intrinsics]:
    """Adjusted intrinsics per camera id: crop shifts the principal point,
    scaling multiplies focal lengths and the principal point."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    out: dict[str, Intrinsics] = {}
    for cam in doc["cameras"]:
        tr = cam["transform"]
        out[cam["id"]] = Intrinsics(
            fx=cam["fx"] * tr["scale_x"],
            fy=cam["fy"] * tr["scale_y"],
            cx=(cam["cx"] - tr["crop_x0"]) * tr["scale_x"],
            cy=(cam["cy"] - tr["crop_y0"]) * tr["scale_y"],
            width=round(tr["crop_w"] * tr["scale_x"]),
            height=round(tr["crop_h"] * tr["scale_y"]),
        )
    return out


def load_label_targets(path: Path | str) -> tuple[str, str, GridConfig, np.ndarray, np.ndarray, np.ndarray]:
    """Dense (F, O, Z) targets from one label file."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    c = doc["config"]
    cfg = GridConfig(h0=c["h0"], w0=c["w0"], h1=c["h1"], w1=c["w1"], s=c["s"])
    f = np.zeros((cfg.h1, cfg.w1), dtype=np.float32)
    o = np.zeros((2, cfg.h1, cfg.w1), dtype=np.float32)
    z = np.zeros((cfg.h1, cfg.w1), dtype=np.float32)
    for kp in doc["keypoints"]:
        i, j = kp["cell"]
        f[i, j] = 1.0
        o[0, i, j] = kp["offset"][0]
        o[1, i, j] = kp["offset"][1]
        if kp["depth_m"] is not None:
            z[i, j] = kp["depth_m"]
    return doc["frame_id"], doc["camera_id"], cfg, f, o, z


def load_image(path: Path | str) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return arr.transpose(2, 0, 1)


def load_corpus(labels_dir: Path | str, images_dir: Path | str, calib_path: Path | str):
    """All (image, targets) samples; every label must share one grid config."""
    labels_dir = Path(labels_dir)
    images_dir = Path(images_dir)
    cameras = load_calibration(calib_path)
    samples: list[Sample] = []
    cfg: GridConfig | None = None
    for path in sorted(labels_dir.glob("*.json")):
        if path.name.endswith(".pred.json"):
            continue
        frame_id, camera_id, file_cfg, f, o, z = load_label_targets(path)
        if cfg is None:
            cfg = file_cfg
        elif file_cfg != cfg:
            raise ValueError(f"{path.name}: grid config {file_cfg} != corpus config {cfg}")
        img_path = images_dir / f"{frame_id}_{camera_id}.png"
        if not img_path.exists():
            raise FileNotFoundError(img_path)
        image = load_image(img_path)
        if image.shape != (3, cfg.h0, cfg.w0):
            raise ValueError(f"{img_path.name}: image {image.shape[1:]} != ({cfg.h0}, {cfg.w0})")
        intr = cameras[camera_id]
        if (intr.width, intr.height) != (cfg.w0, cfg.h0):
            raise ValueError(
                f"{camera_id}: adjusted image {intr.width}x{intr.height} != label config "
                f"{cfg.w0}x{cfg.h0}"
            )
        samples.append(Sample(frame_id, camera_id, image, f, o, z, intr))
    if cfg is None:
        raise ValueError(f"no label files under {labels_dir}")
    return samples, cfg
