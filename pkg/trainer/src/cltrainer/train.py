"""Training loop: Adam at a constant learning rate, loss summed over all
hourglass stacks, seed-pinned batch sampling, atomic checkpointing."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .data import Sample, load_corpus
from .losses import stack_losses
from .model import CenterlineNet, ModelSpec


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3  # constant; no schedule
    gamma: float = 1.0
    steps: int = 500
    batch_size: int = 4
    seed: int = 0

    def __post_init__(self):
        if min(self.learning_rate, self.steps, self.batch_size) <= 0 or self.gamma < 0:
            raise ValueError("train config values must be positive (gamma >= 0)")


def batch_tensors(samples: list[Sample], idx: np.ndarray):
    images = torch.from_numpy(np.stack([samples[i].image for i in idx]))
    f = torch.from_numpy(np.stack([samples[i].f for i in idx]))
    o = torch.from_numpy(np.stack([samples[i].o for i in idx]))
    z = torch.from_numpy(np.stack([samples[i].z for i in idx]))
    intr = torch.tensor(
        [
            [samples[i].intrinsics.fx, samples[i].intrinsics.fy,
             samples[i].intrinsics.cx, samples[i].intrinsics.cy]
            for i in idx
        ],
        dtype=torch.float32,
    )
    return images, f, o, z, intr


def save_checkpoint(path: Path, model: CenterlineNet, spec: ModelSpec) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save({"spec": asdict(spec), "state": model.state_dict()}, tmp)
    os.replace(tmp, path)


def load_checkpoint(path: Path | str) -> CenterlineNet:
    doc = torch.load(path, map_location="cpu", weights_only=True)
    spec = ModelSpec(**doc["spec"])
    model = CenterlineNet(spec)
    model.load_state_dict(doc["state"])
    model.eval()
    return model


def train(
    labels_dir: Path | str,
    images_dir: Path | str,
    calib_path: Path | str,
    out_dir: Path | str,
    spec: ModelSpec | None = None,
    cfg: TrainConfig = TrainConfig(),
    num_stacks: int = 2,
    base_channels: int = 32,
) -> Path:
    """Train on a labeled corpus; writes checkpoint.pt and loss_curve.ndjson.

    Returns the checkpoint path.  The loss curve logs the component losses
    (summed over stacks, batch-averaged) per step.
    """
    samples, grid = load_corpus(labels_dir, images_dir, calib_path)
    if spec is None:
        spec = ModelSpec(
            num_stacks=num_stacks,
            base_channels=base_channels,
            s=grid.s,
            h0=grid.h0,
            w0=grid.w0,
        )
    if (spec.s, spec.h0, spec.w0) != (grid.s, grid.h0, grid.w0):
        raise ValueError(f"model spec {spec} does not match corpus grid {grid}")

    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    model = CenterlineNet(spec)
    model.train()
    optim = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    curve_path = out_dir / "loss_curve.ndjson"
    ckpt_path = out_dir / "checkpoint.pt"
    with curve_path.open("w", encoding="utf-8") as curve:
        for step in range(1, cfg.steps + 1):
            idx = rng.integers(0, len(samples), size=cfg.batch_size)
            images, f, o, z, intr = batch_tensors(samples, idx)
            outputs = model(images, intr)
            losses = stack_losses(outputs, f, o, z, cfg.gamma)
            optim.zero_grad()
            losses["l_total"].backward()
            optim.step()
            record = {"step": step} | {k: float(v.detach()) for k, v in losses.items()}
            curve.write(json.dumps(record) + "\n")
    save_checkpoint(ckpt_path, model, spec)
    return ckpt_path
