"""Stacked-hourglass network with confidence/offset/depth heads.

The stem downsamples the input by the grid scale factor ``s`` (a power of
two); each hourglass stack refines the shared feature map and contributes
its own supervised heads.  Confidence and offsets are sigmoid-bounded.

The depth head is a per-cell MLP (1x1 convolutions only): for every grid
cell it consumes the ray direction of that cell's decoded key-point
((x - cx)/fx, (y - cy)/fy, from the predicted offsets and the camera
intrinsics) concatenated with the cell's feature embedding, and outputs an
unbounded depth in meters.  Using 1x1 convolutions keeps cells independent:
perturbing one cell's embedding can only move that cell's depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class ModelSpec:
    num_stacks: int = 2
    base_channels: int = 32
    s: int = 8
    h0: int = 128
    w0: int = 256

    def __post_init__(self):
        if self.num_stacks < 1:
            raise ValueError("need at least one hourglass stack")
        if self.s < 2 or self.s & (self.s - 1):
            raise ValueError(f"scale factor must be a power of two >= 2, got {self.s}")
        if self.h0 % self.s or self.w0 % self.s:
            raise ValueError(f"input {self.h0}x{self.w0} not divisible by s={self.s}")

    @property
    def h1(self) -> int:
        return self.h0 // self.s

    @property
    def w1(self) -> int:
        return self.w0 // self.s


class ResBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(c_out)
        self.relu = nn.ReLU(inplace=True)
        if stride != 1 or c_in != c_out:
            self.skip = nn.Sequential(
                nn.Conv2d(c_in, c_out, 1, stride=stride, bias=False), nn.BatchNorm2d(c_out)
            )
        else:
            self.skip = nn.Identity()

    def forward(self, x):
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.relu(out + self.skip(x))


class Hourglass(nn.Module):
    """3-level encoder/decoder with additive skips at grid resolution."""

    def __init__(self, channels: int, depth: int = 3):
        super().__init__()
        self.depth = depth
        self.down = nn.ModuleList([ResBlock(channels, channels) for _ in range(depth)])
        self.pool = nn.MaxPool2d(2)
        self.bottom = ResBlock(channels, channels)
        self.up = nn.ModuleList([ResBlock(channels, channels) for _ in range(depth)])
        self.skips = nn.ModuleList([ResBlock(channels, channels) for _ in range(depth)])

    def forward(self, x):
        skips = []
        for k in range(self.depth):
            x = self.down[k](x)
            skips.append(self.skips[k](x))
            x = self.pool(x)
        x = self.bottom(x)
        for k in reversed(range(self.depth)):
            x = nn.functional.interpolate(x, scale_factor=2, mode="nearest")
            x = self.up[k](x) + skips[k]
        return x


class DepthHead(nn.Module):
    """Per-cell MLP on [ray direction, embedding]; 1x1 convolutions only."""

    def __init__(self, channels: int):
        super().__init__()
        self.mlp = nn.Sequential(
            nn.Conv2d(channels + 2, channels, 1),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, 1, 1),
        )

    def forward(self, coords: torch.Tensor, feat: torch.Tensor) -> torch.Tensor:
        return self.mlp(torch.cat([coords, feat], dim=1))


def _head(channels: int, out: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(channels, channels, 1), nn.ReLU(inplace=True), nn.Conv2d(channels, out, 1)
    )


class CenterlineNet(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec
        c = spec.base_channels
        stages = int(math.log2(spec.s))
        stem = [
            nn.Conv2d(3, c // 2, 7, stride=2, padding=3, bias=False),
            nn.BatchNorm2d(c // 2),
            nn.ReLU(inplace=True),
        ]
        ch = c // 2
        for _ in range(stages - 1):
            stem.append(ResBlock(ch, c, stride=2))
            ch = c
        self.stem = nn.Sequential(*stem)
        # encoder depth limited by how often the grid halves cleanly
        hg_depth = 0
        h, w = spec.h1, spec.w1
        while hg_depth < 3 and h % 2 == 0 and w % 2 == 0 and h >= 2 and w >= 2:
            hg_depth += 1
            h //= 2
            w //= 2
        self.stacks = nn.ModuleList(
            [Hourglass(c, depth=max(1, hg_depth)) for _ in range(spec.num_stacks)]
        )
        self.conf_heads = nn.ModuleList([_head(c, 1) for _ in range(spec.num_stacks)])
        self.offset_heads = nn.ModuleList([_head(c, 2) for _ in range(spec.num_stacks)])
        self.depth_heads = nn.ModuleList([DepthHead(c) for _ in range(spec.num_stacks)])
        for k in range(spec.num_stacks):
            # small output weights keep the sigmoid heads out of saturation
            # at init (batch-norm features can be large in train mode);
            # the depth head starts at a mid-range road depth
            for head in (self.conf_heads[k], self.offset_heads[k]):
                nn.init.normal_(head[-1].weight, std=0.01)
                nn.init.zeros_(head[-1].bias)
            nn.init.normal_(self.depth_heads[k].mlp[-1].weight, std=0.01)
            nn.init.constant_(self.depth_heads[k].mlp[-1].bias, 25.0)

    def ray_coords(self, offsets: torch.Tensor, intrinsics: torch.Tensor) -> torch.Tensor:
        """(B,2,h1,w1) ray directions of each cell's decoded pixel.

        ``offsets`` holds (ox, oy) in [0,1]; ``intrinsics`` is (B, 4) rows of
        (fx, fy, cx, cy) for the adjusted image.
        """
        b, _, h1, w1 = offsets.shape
        s = self.spec.s
        device = offsets.device
        jj = torch.arange(w1, device=device, dtype=offsets.dtype).view(1, 1, 1, w1)
        ii = torch.arange(h1, device=device, dtype=offsets.dtype).view(1, 1, h1, 1)
        x = (jj + offsets[:, 0:1]) * s
        y = (ii + offsets[:, 1:2]) * s
        fx = intrinsics[:, 0].view(b, 1, 1, 1)
        fy = intrinsics[:, 1].view(b, 1, 1, 1)
        cx = intrinsics[:, 2].view(b, 1, 1, 1)
        cy = intrinsics[:, 3].view(b, 1, 1, 1)
        return torch.cat([(x - cx) / fx, (y - cy) / fy], dim=1)

    def forward(self, images: torch.Tensor, intrinsics: torch.Tensor, num_stacks: int | None = None):
        """Per-stack predictions: list of dicts with conf (B,1,h1,w1) in
        [0,1], offset (B,2,h1,w1) in [0,1], depth (B,1,h1,w1) in meters."""
        feat = self.stem(images)
        outputs = []
        use = len(self.stacks) if num_stacks is None else min(num_stacks, len(self.stacks))
        for k in range(use):
            feat = self.stacks[k](feat)
            conf = torch.sigmoid(self.conf_heads[k](feat))
            offset = torch.sigmoid(self.offset_heads[k](feat))
            coords = self.ray_coords(offset, intrinsics)
            depth = self.depth_heads[k](coords, feat)
            outputs.append({"conf": conf, "offset": offset, "depth": depth})
        return outputs
