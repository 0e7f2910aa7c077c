"""Training loop: cross-entropy segmentation with classical SGD."""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from pathlib import Path

import torch
from torch import nn
from torch.utils.data import DataLoader

from .data import SampleSet, SegmentationSamples, compute_normalization
from .model import ARCHITECTURE, build_model, count_parameters

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.pt"
LOG_NAME = "training_log.jsonl"


@dataclasses.dataclass
class TrainSpec:
    """One training run. Hyperparameter defaults follow the reference
    recipe (SGD, lr 1e-5, momentum 0.99, weight decay 1e-5, batches of 2,
    4 epochs); small desk-scale datasets typically want epochs raised to
    40. Everything is overridable."""

    dataset: str | Path
    out_dir: str | Path
    epochs: int = 4
    batch_size: int = 2
    learning_rate: float = 1e-5
    momentum: float = 0.99
    weight_decay: float = 1e-5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def train(spec: TrainSpec) -> dict:
    """Run the loop, write checkpoint.pt and training_log.jsonl, return a
    summary with the final-epoch mean loss."""
    samples = SampleSet(spec.dataset)
    if len(samples) == 0:
        raise ValueError(f"{spec.dataset}: dataset holds no records")
    norm = compute_normalization(samples)  # also validates every record
    torch.manual_seed(spec.seed)
    model = build_model(samples.n_channels, samples.output_dim)
    logger.info("training %s: %d records, %d channels, %d parameters",
                samples.slug, len(samples), samples.n_channels,
                count_parameters(model))

    loader = DataLoader(SegmentationSamples(samples, norm),
                        batch_size=spec.batch_size, shuffle=True,
                        num_workers=0,
                        generator=torch.Generator().manual_seed(spec.seed))
    optimizer = torch.optim.SGD(model.parameters(), lr=spec.learning_rate,
                                momentum=spec.momentum,
                                weight_decay=spec.weight_decay)
    loss_fn = nn.CrossEntropyLoss()

    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / LOG_NAME
    step = 0
    final_epoch_loss = float("nan")
    t0 = time.perf_counter()
    with open(log_path, "w") as log:
        for epoch in range(spec.epochs):
            model.train()
            epoch_losses = []
            for x, y in loader:
                optimizer.zero_grad()
                loss = loss_fn(model(x), y)
                loss.backward()
                optimizer.step()
                step += 1
                loss_value = float(loss.detach())
                epoch_losses.append(loss_value)
                log.write(json.dumps({"step": step, "epoch": epoch,
                                      "loss": loss_value}) + "\n")
            log.flush()
            final_epoch_loss = sum(epoch_losses) / len(epoch_losses)
            logger.info("epoch %d/%d: mean loss %.5f", epoch + 1,
                        spec.epochs, final_epoch_loss)

    checkpoint = {
        "architecture": ARCHITECTURE,
        "n_channels": samples.n_channels,
        "output_dim": samples.output_dim,
        "model_state": model.state_dict(),
        "normalization": norm.state(),
        "dataset_slug": samples.slug,
        "config_digest": samples.config_digest,
        "hyperparameters": {
            "epochs": spec.epochs, "batch_size": spec.batch_size,
            "learning_rate": spec.learning_rate, "momentum": spec.momentum,
            "weight_decay": spec.weight_decay, "seed": spec.seed,
        },
    }
    torch.save(checkpoint, out_dir / CHECKPOINT_NAME)
    summary = {"steps": step, "final_epoch_loss": final_epoch_loss,
               "seconds": time.perf_counter() - t0,
               "checkpoint": str(out_dir / CHECKPOINT_NAME)}
    logger.info("finished %d steps in %.1fs -> %s", step,
                summary["seconds"], summary["checkpoint"])
    return summary
