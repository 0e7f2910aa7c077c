"""Synthetic dataset directories written in the documented disk format."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from echomap_trainer.data import SENTINEL

GRID = 16
OUT = 5


def _save_record(path: Path, arr: np.ndarray) -> str:
    np.save(path, arr)
    return hashlib.sha256(path.read_bytes()).hexdigest()


def make_dataset(root: Path, ids, n_channels: int = 4, grid: int = GRID,
                 out: int = OUT, slug: str | None = None, seed: int = 0,
                 storage: str = "full_frame", kind: str | None = None) -> Path:
    """Write a learnable synthetic dataset: each input channel carries the
    block-upsampled target plus noise, with sentinel pixels on the top row."""
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True)
    rec_dir = root / "records"
    rec_dir.mkdir()
    scale = grid / out
    entries = []
    for rid in ids:
        target = (rng.random((out, out)) < 0.4).astype(np.uint8)
        signal = np.zeros((grid, grid))
        for r in range(out):
            for c in range(out):
                signal[int(r * scale):int((r + 1) * scale),
                       int(c * scale):int((c + 1) * scale)] = target[r, c]
        frames = (rng.normal(-60.0, 1.0, size=(n_channels, grid, grid))
                  + 12.0 * signal).astype(np.float32)
        frames[:, 0, :] = SENTINEL
        entries.append({
            "id": rid,
            "input": f"records/{rid}.input.npy",
            "input_sha256": _save_record(rec_dir / f"{rid}.input.npy", frames),
            "target": f"records/{rid}.target.npy",
            "target_sha256": _save_record(rec_dir / f"{rid}.target.npy",
                                          target),
        })
    degradation = None
    if slug is not None:
        group, s_count, ss = slug.split("_")
        degradation = {"band_group": group,
                       "source_count": int(s_count[1:]),
                       "subsampling": int(ss[2:]), "slug": slug}
    manifest = {
        "kind": kind or "loudness-occupancy-dataset",
        "format_version": 1,
        "config": {"digest": "0" * 64, "text": "# synthetic\n"},
        "grid": {"input_dim": grid, "output_dim": out},
        "channels": [{"index": c, "source": c, "band": 0}
                     for c in range(n_channels)],
        "degradation": degradation,
        "storage": storage,
        "parent_manifest_sha256": None,
        "count": len(entries),
        "records": entries,
        "provenance": {"tool": "synthetic", "seed": seed, "split": "test"},
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return root


@pytest.fixture(scope="session")
def train_ds(tmp_path_factory) -> Path:
    return make_dataset(tmp_path_factory.mktemp("sets") / "train",
                        [f"obj_{i}" for i in range(6)], seed=3)


@pytest.fixture(scope="session")
def eval_ds(tmp_path_factory) -> Path:
    return make_dataset(tmp_path_factory.mktemp("sets") / "eval",
                        ["eval_a", "eval_b"], slug="low_s8_ss2", seed=9)
