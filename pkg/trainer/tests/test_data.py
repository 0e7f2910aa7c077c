"""Dataset reading and input standardization."""

import numpy as np
import pytest
import torch

from conftest import make_dataset
from echomap_trainer.data import (SENTINEL, Normalization, SampleSet,
                                  SegmentationSamples, compute_normalization)


def test_sample_set_metadata(train_ds, eval_ds):
    ss = SampleSet(train_ds)
    assert ss.record_ids == [f"obj_{i}" for i in range(6)]
    assert ss.n_channels == 4
    assert ss.input_dim == 16 and ss.output_dim == 5
    assert ss.slug == "full_s8_ss1"
    assert SampleSet(eval_ds).slug == "low_s8_ss2"
    frames, target = ss.load(0)
    assert frames.shape == (4, 16, 16) and frames.dtype == np.float32
    assert target.shape == (5, 5) and target.dtype == np.uint8


def test_sample_set_rejections(tmp_path):
    with pytest.raises(FileNotFoundError, match="not a dataset directory"):
        SampleSet(tmp_path / "nowhere")
    compact = make_dataset(tmp_path / "compact", ["a"], storage="compact")
    with pytest.raises(ValueError, match="full-frame"):
        SampleSet(compact)
    alien = make_dataset(tmp_path / "alien", ["a"], kind="something-else")
    with pytest.raises(ValueError, match="kind"):
        SampleSet(alien)


def test_normalization_statistics(train_ds):
    ss = SampleSet(train_ds)
    norm = compute_normalization(ss)
    stacked = np.stack([ss.load(i)[0] for i in range(len(ss))])
    for c in range(ss.n_channels):
        vals = stacked[:, c][stacked[:, c] != SENTINEL].astype(np.float64)
        assert norm.mean[c] == pytest.approx(vals.mean(), rel=1e-12)
        assert norm.std[c] == pytest.approx(vals.std(), rel=1e-9)


def test_apply_standardizes_and_zeroes_sentinel(train_ds):
    ss = SampleSet(train_ds)
    norm = compute_normalization(ss)
    frames, _ = ss.load(2)
    out = norm.apply(frames)
    assert out.dtype == np.float32
    assert np.all(out[:, 0, :] == 0.0)  # sentinel row carries no signal
    for c in range(ss.n_channels):
        want = (frames[c, 1:] - norm.mean[c]) / norm.std[c]
        assert np.allclose(out[c, 1:], want, atol=1e-5)
    known = out[frames != SENTINEL]
    assert abs(float(known.mean())) < 0.5


def test_normalization_round_trip_and_mismatch(train_ds):
    norm = compute_normalization(SampleSet(train_ds))
    back = Normalization.from_state(norm.state())
    assert np.array_equal(back.mean, norm.mean)
    assert np.array_equal(back.std, norm.std)
    short = Normalization(mean=norm.mean[:2], std=norm.std[:2])
    with pytest.raises(ValueError, match="channels"):
        SegmentationSamples(SampleSet(train_ds), short)


def test_all_sentinel_channel_rejected(tmp_path):
    ds = make_dataset(tmp_path / "dead", ["a", "b"])
    for rid in ("a", "b"):
        path = ds / "records" / f"{rid}.input.npy"
        frames = np.load(path)
        frames[3] = SENTINEL
        np.save(path, frames)
    with pytest.raises(ValueError, match="no measured pixels"):
        compute_normalization(SampleSet(ds))


def test_torch_view(train_ds):
    ss = SampleSet(train_ds)
    norm = compute_normalization(ss)
    view = SegmentationSamples(ss, norm)
    assert len(view) == 6
    x, y = view[4]
    assert x.shape == (4, 16, 16) and x.dtype.is_floating_point
    assert y.shape == (5, 5) and y.dtype == torch.int64
    assert np.allclose(x.numpy(), norm.apply(ss.load(4)[0]))
