"""Command-line entry points for training and inference."""

from __future__ import annotations

import logging

import click

from .predict import predict as run_predict
from .train import TrainSpec, train as run_train


@click.group()
@click.option("--verbose", is_flag=True, help="Debug-level logging.")
def main(verbose: bool) -> None:
    """Occupancy segmentation on loudness-occupancy datasets."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")


@main.command("train")
@click.option("--dataset", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Dataset directory holding manifest.json.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False),
              help="Destination for checkpoint.pt and training_log.jsonl.")
@click.option("--epochs", type=int, default=4, show_default=True,
              help="Passes over the dataset; desk-scale runs usually use 40.")
@click.option("--batch-size", type=int, default=2, show_default=True)
@click.option("--lr", "learning_rate", type=float, default=1e-5,
              show_default=True)
@click.option("--momentum", type=float, default=0.99, show_default=True)
@click.option("--weight-decay", type=float, default=1e-5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_train(dataset: str, out_dir: str, epochs: int, batch_size: int,
              learning_rate: float, momentum: float, weight_decay: float,
              seed: int) -> None:
    """Train a segmentation model on one dataset directory."""
    try:
        spec = TrainSpec(dataset=dataset, out_dir=out_dir, epochs=epochs,
                         batch_size=batch_size, learning_rate=learning_rate,
                         momentum=momentum, weight_decay=weight_decay,
                         seed=seed)
        summary = run_train(spec)
    except (ValueError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{summary['steps']} steps, final epoch mean loss "
               f"{summary['final_epoch_loss']:.5f} -> {summary['checkpoint']}")


@main.command("predict")
@click.option("--checkpoint", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--dataset", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False),
              help="Directory receiving <id>.pred.npy files.")
def cmd_predict(checkpoint: str, dataset: str, out_dir: str) -> None:
    """Write argmax occupancy predictions for every record."""
    try:
        written = run_predict(checkpoint, dataset, out_dir)
    except (ValueError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {len(written)} predictions -> {out_dir}")


if __name__ == "__main__":
    main()
