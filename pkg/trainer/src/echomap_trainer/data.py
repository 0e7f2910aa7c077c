"""Reader for loudness-occupancy dataset directories.

A dataset directory holds manifest.json plus records/<id>.input.npy
(float32, (channels, H, W), inaccessible or dropped pixels carrying the
float32 lowest-value sentinel) and records/<id>.target.npy (uint8 binary
occupancy). Inputs are standardized per channel with statistics computed
over non-sentinel training pixels; sentinel pixels become exactly zero
after standardization so they carry no signal.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import Dataset as TorchDataset

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
DATASET_KIND = "loudness-occupancy-dataset"
SENTINEL = np.float32(np.finfo(np.float32).min)


class SampleSet:
    """One dataset directory: manifest metadata plus lazy array loaders."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        manifest_path = self.path / MANIFEST_NAME
        if not manifest_path.is_file():
            raise FileNotFoundError(f"{self.path} is not a dataset directory")
        self.manifest = json.loads(manifest_path.read_text())
        if self.manifest.get("kind") != DATASET_KIND:
            raise ValueError(f"{self.path}: unexpected dataset kind "
                             f"{self.manifest.get('kind')!r}")
        if self.manifest.get("storage") != "full_frame":
            raise ValueError(
                f"{self.path}: storage {self.manifest.get('storage')!r} not "
                f"supported; re-export the dataset with full-frame storage")
        self.records = self.manifest["records"]

    @property
    def record_ids(self) -> list[str]:
        return [r["id"] for r in self.records]

    @property
    def n_channels(self) -> int:
        return len(self.manifest["channels"])

    @property
    def input_dim(self) -> int:
        return int(self.manifest["grid"]["input_dim"])

    @property
    def output_dim(self) -> int:
        return int(self.manifest["grid"]["output_dim"])

    @property
    def slug(self) -> str:
        spec = self.manifest.get("degradation")
        return spec["slug"] if spec else "full_s8_ss1"

    @property
    def config_digest(self) -> str:
        return self.manifest["config"]["digest"]

    def load(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        rec = self.records[index]
        inp = np.load(self.path / rec["input"])
        target = np.load(self.path / rec["target"])
        if inp.shape != (self.n_channels, self.input_dim, self.input_dim):
            raise ValueError(f"{rec['id']}: input shape {inp.shape} does not "
                             f"match the manifest")
        return inp, target

    def __len__(self) -> int:
        return len(self.records)


@dataclasses.dataclass
class Normalization:
    """Per-channel standardization statistics from non-sentinel pixels."""

    mean: np.ndarray  # (channels,)
    std: np.ndarray   # (channels,)

    def apply(self, frames: np.ndarray) -> np.ndarray:
        """Standardize and zero out sentinel pixels, returned as float32."""
        known = frames != SENTINEL
        out = (frames - self.mean[:, None, None]) / self.std[:, None, None]
        out = np.where(known, out, 0.0)
        return out.astype(np.float32)

    def state(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_state(cls, state: dict) -> "Normalization":
        return cls(mean=np.asarray(state["mean"], dtype=np.float64),
                   std=np.asarray(state["std"], dtype=np.float64))


def compute_normalization(samples: SampleSet) -> Normalization:
    """Accumulate per-channel mean and std over every non-sentinel pixel."""
    n_ch = samples.n_channels
    total = np.zeros(n_ch)
    total_sq = np.zeros(n_ch)
    count = np.zeros(n_ch)
    for i in range(len(samples)):
        frames, _ = samples.load(i)
        known = frames != SENTINEL
        vals = np.where(known, frames.astype(np.float64), 0.0)
        total += vals.sum(axis=(1, 2))
        total_sq += (vals * vals).sum(axis=(1, 2))
        count += known.sum(axis=(1, 2))
    if (count == 0).any():
        raise ValueError("a channel has no measured pixels to normalize by")
    mean = total / count
    var = np.maximum(total_sq / count - mean ** 2, 0.0)
    std = np.sqrt(var)
    std[std < 1e-6] = 1.0
    return Normalization(mean=mean, std=std)


class SegmentationSamples(TorchDataset):
    """Torch view: standardized input tensor plus integer class target."""

    def __init__(self, samples: SampleSet, norm: Normalization):
        if len(norm.mean) != samples.n_channels:
            raise ValueError(
                f"normalization covers {len(norm.mean)} channels, dataset "
                f"has {samples.n_channels}")
        self.samples = samples
        self.norm = norm

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, index: int):
        frames, target = self.samples.load(index)
        x = torch.from_numpy(self.norm.apply(frames))
        y = torch.from_numpy(target.astype(np.int64))
        return x, y
