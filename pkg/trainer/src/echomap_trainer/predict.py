"""Inference: argmax occupancy predictions in the evaluator's file layout."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import torch

from .data import Normalization, SampleSet
from .model import build_model

logger = logging.getLogger(__name__)

PREDICTION_SUFFIX = ".pred.npy"


def load_checkpoint(path: str | Path) -> dict:
    return torch.load(Path(path), map_location="cpu", weights_only=True)


def predict(checkpoint_path: str | Path, dataset_dir: str | Path,
            out_dir: str | Path) -> list[Path]:
    """Write one binary <id>.pred.npy per dataset record."""
    samples = SampleSet(dataset_dir)
    ck = load_checkpoint(checkpoint_path)
    if ck["n_channels"] != samples.n_channels:
        raise ValueError(
            f"checkpoint expects {ck['n_channels']} channels, dataset "
            f"{samples.slug} has {samples.n_channels}")
    if ck["output_dim"] != samples.output_dim:
        raise ValueError(
            f"checkpoint predicts {ck['output_dim']}x{ck['output_dim']}, "
            f"dataset targets are {samples.output_dim}x{samples.output_dim}")
    norm = Normalization.from_state(ck["normalization"])
    model = build_model(samples.n_channels, samples.output_dim)
    model.load_state_dict(ck["model_state"])
    model.eval()

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    with torch.no_grad():
        for i, rid in enumerate(samples.record_ids):
            frames, _ = samples.load(i)
            x = torch.from_numpy(norm.apply(frames))[None]
            pred = model(x).argmax(dim=1)[0].numpy().astype(np.uint8)
            path = out / f"{rid}{PREDICTION_SUFFIX}"
            np.save(path, pred)
            written.append(path)
    logger.info("wrote %d predictions -> %s", len(written), out)
    return written
