"""Training loop behavior: logging, checkpoints, determinism, learning."""

import json

import pytest
import torch

from conftest import make_dataset
from echomap_trainer.model import ARCHITECTURE
from echomap_trainer.train import TrainSpec, train


def _losses(out_dir):
    lines = (out_dir / "training_log.jsonl").read_text().splitlines()
    return [json.loads(ln)["loss"] for ln in lines]


def test_overfit_single_batch_trend(tmp_path):
    """50 steps on one repeated batch must trend downward."""
    ds = make_dataset(tmp_path / "pair", ["a", "b"], seed=1)
    spec = TrainSpec(dataset=ds, out_dir=tmp_path / "run", epochs=50,
                     batch_size=2, learning_rate=1e-4, seed=0)
    summary = train(spec)
    losses = _losses(tmp_path / "run")
    assert summary["steps"] == 50 and len(losses) == 50
    thirds = [sum(losses[i:i + 10]) / 10 for i in (0, 20, 40)]
    assert thirds[0] >= thirds[1] >= thirds[2]
    assert losses[-1] < losses[0]


def test_log_and_checkpoint_contents(tmp_path, train_ds):
    out = tmp_path / "run"
    spec = TrainSpec(dataset=train_ds, out_dir=out, epochs=2, seed=4)
    summary = train(spec)
    records = [json.loads(ln)
               for ln in (out / "training_log.jsonl").read_text().splitlines()]
    assert len(records) == summary["steps"] == 2 * 3  # 6 records, batches of 2
    assert [r["step"] for r in records] == list(range(1, 7))
    assert {r["epoch"] for r in records} == {0, 1}
    assert all(isinstance(r["loss"], float) for r in records)

    ck = torch.load(out / "checkpoint.pt", weights_only=True)
    assert ck["architecture"] == ARCHITECTURE
    assert ck["n_channels"] == 4 and ck["output_dim"] == 5
    assert len(ck["normalization"]["mean"]) == 4
    assert len(ck["normalization"]["std"]) == 4
    assert ck["dataset_slug"] == "full_s8_ss1"
    assert ck["hyperparameters"]["epochs"] == 2
    assert ck["hyperparameters"]["seed"] == 4
    state = ck["model_state"]
    assert all(isinstance(v, torch.Tensor) for v in state.values())


def test_same_seed_same_weights(tmp_path, train_ds):
    outs = []
    for name in ("one", "two"):
        spec = TrainSpec(dataset=train_ds, out_dir=tmp_path / name,
                         epochs=2, seed=7)
        train(spec)
        outs.append(torch.load(tmp_path / name / "checkpoint.pt",
                               weights_only=True)["model_state"])
    assert all(torch.equal(outs[0][k], outs[1][k]) for k in outs[0])
    assert _losses(tmp_path / "one") == _losses(tmp_path / "two")


def test_bad_specs(tmp_path, train_ds):
    with pytest.raises(ValueError):
        TrainSpec(dataset=train_ds, out_dir=tmp_path, epochs=0)
    with pytest.raises(ValueError):
        TrainSpec(dataset=train_ds, out_dir=tmp_path, learning_rate=0.0)
    empty = make_dataset(tmp_path / "empty", [])
    with pytest.raises(ValueError, match="no records"):
        train(TrainSpec(dataset=empty, out_dir=tmp_path / "x"))
