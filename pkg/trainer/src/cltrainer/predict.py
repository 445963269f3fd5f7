"""Inference: emit CLTN prediction frames the evaluator can score."""

from __future__ import annotations

import json
from pathlib import Path

import torch

from . import cltn
from .data import load_calibration, load_image
from .model import CenterlineNet


def _split_stem(stem: str) -> tuple[str, str]:
    """frame id and camera id from an `{frame_id}_{camera_id}` file stem."""
    frame_id, _, camera_id = stem.partition("_")
    if not frame_id or not camera_id:
        raise ValueError(f"cannot split {stem!r} into frame and camera ids")
    return frame_id, camera_id


def predict_corpus(
    model: CenterlineNet,
    images_dir: Path | str,
    calib_path: Path | str,
    out_dir: Path | str,
    num_stacks: int | None = None,
) -> int:
    """Run the model over every PNG and write manifest + tensors per frame.

    ``num_stacks`` truncates inference to the first stacks (speed/accuracy
    trade-off); the last evaluated stack's heads are exported.
    """
    model.eval()
    cameras = load_calibration(calib_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = model.spec
    count = 0
    for img_path in sorted(Path(images_dir).glob("*.png")):
        frame_id, camera_id = _split_stem(img_path.stem)
        intr = cameras[camera_id]
        image = load_image(img_path)
        if image.shape != (3, spec.h0, spec.w0):
            raise ValueError(
                f"{img_path.name}: image {image.shape[1:]} != model input ({spec.h0}, {spec.w0})"
            )
        images = torch.from_numpy(image).unsqueeze(0)
        intr_t = torch.tensor([[intr.fx, intr.fy, intr.cx, intr.cy]], dtype=torch.float32)
        with torch.no_grad():
            out = model(images, intr_t, num_stacks=num_stacks)[-1]
        conf = out["conf"][0, 0].numpy()
        offset = out["offset"][0].numpy().transpose(1, 2, 0)  # (h1, w1, 2), x then y
        depth = out["depth"][0, 0].numpy()
        stem = f"{frame_id}_{camera_id}"
        cltn.save_tensor(out_dir / f"{stem}.conf.cltn", conf)
        cltn.save_tensor(out_dir / f"{stem}.offset.cltn", offset)
        cltn.save_tensor(out_dir / f"{stem}.depth.cltn", depth)
        manifest = {
            "frame_id": frame_id,
            "camera_id": camera_id,
            "conf": f"{stem}.conf.cltn",
            "offset": f"{stem}.offset.cltn",
            "depth": f"{stem}.depth.cltn",
        }
        (out_dir / f"{stem}.pred.json").write_text(
            json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
        )
        count += 1
    if count == 0:
        raise FileNotFoundError(f"no PNG images under {images_dir}")
    return count
