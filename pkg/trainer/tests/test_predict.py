"""Inference output contract and the command-line round trip."""

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import make_dataset
from echomap_trainer.cli import main
from echomap_trainer.predict import predict
from echomap_trainer.train import TrainSpec, train


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory, train_ds):
    out = tmp_path_factory.mktemp("model")
    train(TrainSpec(dataset=train_ds, out_dir=out, epochs=1, seed=0))
    return out / "checkpoint.pt"


def test_prediction_files(tmp_path, checkpoint, train_ds):
    written = predict(checkpoint, train_ds, tmp_path / "preds")
    assert [p.name for p in written] == [f"obj_{i}.pred.npy"
                                         for i in range(6)]
    for path in written:
        pred = np.load(path)
        assert pred.shape == (5, 5) and pred.dtype == np.uint8
        assert set(np.unique(pred)) <= {0, 1}


def test_channel_and_shape_mismatch(tmp_path, checkpoint):
    narrow = make_dataset(tmp_path / "narrow", ["n"], n_channels=2)
    with pytest.raises(ValueError, match="channels"):
        predict(checkpoint, narrow, tmp_path / "p1")
    wide_out = make_dataset(tmp_path / "wide", ["w"], grid=16, out=8)
    with pytest.raises(ValueError, match="8x8"):
        predict(checkpoint, wide_out, tmp_path / "p2")


def test_cli_round_trip(tmp_path, train_ds, eval_ds):
    runner = CliRunner()
    model_dir = tmp_path / "model"
    res = runner.invoke(main, ["train", "--dataset", str(train_ds),
                               "--out", str(model_dir), "--epochs", "1"],
                        catch_exceptions=False)
    assert res.exit_code == 0, res.output + res.stderr
    assert "final epoch mean loss" in res.output
    res = runner.invoke(main, ["predict", "--checkpoint",
                               str(model_dir / "checkpoint.pt"),
                               "--dataset", str(train_ds),
                               "--out", str(tmp_path / "preds")],
                        catch_exceptions=False)
    assert res.exit_code == 0
    assert "wrote 6 predictions" in res.output
    assert len(list((tmp_path / "preds").glob("*.pred.npy"))) == 6

    res = runner.invoke(main, ["predict", "--checkpoint",
                               str(model_dir / "checkpoint.pt"),
                               "--dataset", str(tmp_path / "missing"),
                               "--out", str(tmp_path / "p")],
                        catch_exceptions=False)
    assert res.exit_code == 2  # usage error from the path check
