"""Compact U-Net style encoder-decoder for two-class occupancy maps.

The loudness frame is wider than the prediction target (the target tiles
only the central blocked square), so the head resamples the finest decoder
features to the target grid instead of cropping. Group normalization keeps
the tiny default batch size (2) from destabilizing the statistics and
keeps runs reproducible on CPU.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

ARCHITECTURE = "unet-gn/stem2-32-64-128-192"


def _block(c_in: int, c_out: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, 3, padding=1, bias=False),
        nn.GroupNorm(8, c_out),
        nn.ReLU(inplace=True),
        nn.Conv2d(c_out, c_out, 3, padding=1, bias=False),
        nn.GroupNorm(8, c_out),
        nn.ReLU(inplace=True),
    )


class OccupancyNet(nn.Module):
    """Predicts per-pixel air/object logits on the output grid."""

    def __init__(self, n_channels: int, output_dim: int):
        super().__init__()
        if n_channels < 1 or output_dim < 1:
            raise ValueError("n_channels and output_dim must be positive")
        self.n_channels = n_channels
        self.output_dim = output_dim
        self.stem = nn.Sequential(
            nn.Conv2d(n_channels, 32, 3, stride=2, padding=1, bias=False),
            nn.GroupNorm(8, 32),
            nn.ReLU(inplace=True),
            nn.Conv2d(32, 32, 3, padding=1, bias=False),
            nn.GroupNorm(8, 32),
            nn.ReLU(inplace=True),
        )
        self.down1 = _block(32, 64)
        self.down2 = _block(64, 128)
        self.down3 = _block(128, 192)
        self.pool = nn.MaxPool2d(2)
        self.up2 = _block(192 + 128, 128)
        self.up1 = _block(128 + 64, 96)
        self.head = nn.Sequential(
            nn.Conv2d(96, 64, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(64, 2, 3, padding=1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        s0 = self.stem(x)                       # H/2
        s1 = self.down1(self.pool(s0))          # H/4
        s2 = self.down2(self.pool(s1))          # H/8
        s3 = self.down3(self.pool(s2))          # H/16
        u2 = F.interpolate(s3, size=s2.shape[-2:], mode="bilinear",
                           align_corners=False)
        u2 = self.up2(torch.cat([u2, s2], dim=1))
        u1 = F.interpolate(u2, size=s1.shape[-2:], mode="bilinear",
                           align_corners=False)
        u1 = self.up1(torch.cat([u1, s1], dim=1))
        out = F.interpolate(u1, size=(self.output_dim, self.output_dim),
                            mode="bilinear", align_corners=False)
        return self.head(out)


def build_model(n_channels: int, output_dim: int, seed: int | None = None
                ) -> OccupancyNet:
    """Construct the network, optionally with seeded weight initialization."""
    if seed is not None:
        torch.manual_seed(seed)
    return OccupancyNet(n_channels, output_dim)


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
