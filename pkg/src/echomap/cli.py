"""Command-line pipeline driver.

Stages run as subcommands against a shared output directory:

    gen-shapes -> simulate -> rasterize -> pack -> expand -> evaluate

The first command run against an output directory echoes the resolved
configuration to <out>/config.txt; later commands refuse to proceed if
their resolved configuration hashes differently, so one directory always
holds artifacts of exactly one configuration.

Exit codes: 0 success, 1 validation or usage failure, 2 stage finished
with recorded per-task failures.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import dataset as dataset_mod
from . import report as report_mod
from . import runner, shapes
from .bem import build_mesh, solve_sources
from .config import SceneConfig, load_config
from .loudness import DB_FLOOR, UNKNOWN_VALUE, quadrature_frequencies

logger = logging.getLogger(__name__)

STAGES = ("gen-shapes", "simulate", "rasterize", "pack", "expand", "evaluate")
SPLITS = ("training", "test")

CONFIG_ECHO = "config.txt"
SHAPES_DIR = "shapes"
SEEDS_NAME = "seeds.json"


def _resolve_config(out: Path, config_path: str | None,
                    profile: str) -> SceneConfig:
    """Load the config and pin the output directory to its digest."""
    try:
        cfg = load_config(config_path, profile)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    echo = out / CONFIG_ECHO
    if echo.exists():
        stored = SceneConfig.from_text(echo.read_text())
        if stored.digest() != cfg.digest():
            raise click.ClickException(
                f"{echo} holds a different configuration "
                f"({stored.digest()[:12]} != {cfg.digest()[:12]}); "
                "use a fresh --out directory or the original config")
    else:
        out.mkdir(parents=True, exist_ok=True)
        echo.write_text(cfg.to_text())
    return cfg


def _shape_path(out: Path, split: str) -> Path:
    return out / SHAPES_DIR / f"{split}.txt"


def _load_split(out: Path, split: str) -> tuple[list[str], list]:
    path = _shape_path(out, split)
    if not path.exists():
        raise click.ClickException(
            f"{path} not found; run gen-shapes first")
    return shapes.load_shapes(path)


def _stored_seed(out: Path) -> int | None:
    path = out / SHAPES_DIR / SEEDS_NAME
    if not path.exists():
        return None
    return json.loads(path.read_text()).get("seed")


def _split_names(split: str) -> tuple[str, ...]:
    return SPLITS if split == "both" else (split,)


def common_options(f):
    f = click.option("--profile", type=click.Choice(["desk", "paper"]),
                     default="desk", show_default=True,
                     help="Base configuration profile.")(f)
    f = click.option("--config", "config_path",
                     type=click.Path(exists=True, dir_okay=False),
                     default=None, help="Config file overriding the profile.")(f)
    f = click.option("--out", "out_str", required=True,
                     type=click.Path(file_okay=False),
                     help="Output directory for all pipeline artifacts.")(f)
    return f


@click.group()
@click.option("--verbose", is_flag=True, help="Debug-level logging.")
def main(verbose: bool) -> None:
    """Acoustic scattering dataset pipeline."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")


@main.command("gen-shapes")
@common_options
@click.option("--seed", type=int, default=0, show_default=True,
              help="Base seed; the test split uses seed+1.")
@click.option("--train-per-category", type=int, default=40, show_default=True)
@click.option("--test-per-category", type=int, default=10, show_default=True)
def cmd_gen_shapes(out_str: str, config_path: str | None, profile: str,
                   seed: int, train_per_category: int,
                   test_per_category: int) -> None:
    """Draw both polygon splits and save them as text records."""
    out = Path(out_str)
    cfg = _resolve_config(out, config_path, profile)
    try:
        train_spec = shapes.training_spec(train_per_category, seed)
        eval_spec = shapes.test_spec(test_per_category, seed + 1)
        train_polys = shapes.generate_split(train_spec, cfg)
        test_polys = shapes.generate_split(eval_spec, cfg, avoid=train_polys)
    except (ValueError, RuntimeError) as exc:
        raise click.ClickException(str(exc))
    shape_dir = out / SHAPES_DIR
    shape_dir.mkdir(parents=True, exist_ok=True)
    for spec, polys in ((train_spec, train_polys), (eval_spec, test_polys)):
        ids = [f"{spec.split}_{cat}_{t:03d}" for cat in spec.categories
               for t in range(spec.instances_per_category)]
        shapes.save_shapes(polys, ids, _shape_path(out, spec.split))
        click.echo(f"{spec.split}: {len(polys)} shapes")
    (shape_dir / SEEDS_NAME).write_text(
        json.dumps({"seed": seed, "test_seed": seed + 1}, sort_keys=True,
                   indent=2) + "\n")


@main.command("simulate")
@common_options
@click.option("--split", type=click.Choice(SPLITS + ("both",)),
              default="both", show_default=True)
@click.option("--workers", type=int, default=1, show_default=True,
              help="Process pool size; 1 runs inline.")
@click.option("--resume/--no-resume", default=True, show_default=True,
              help="Skip (object, source, band) grids already on disk.")
@click.option("--limit", type=int, default=None,
              help="Only the first N objects of each split.")
def cmd_simulate(out_str: str, config_path: str | None, profile: str,
                 split: str, workers: int, resume: bool,
                 limit: int | None) -> None:
    """Solve the scattering problems and write loudness grids."""
    if workers < 1:
        raise click.ClickException("--workers must be >= 1")
    out = Path(out_str)
    cfg = _resolve_config(out, config_path, profile)
    failed = 0
    for name in _split_names(split):
        ids, polys = _load_split(out, name)
        stats = runner.simulate_split(cfg, out, name, ids, polys,
                                      workers=workers, resume=resume,
                                      limit=limit)
        click.echo(f"{name}: {stats.completed} tasks computed, "
                   f"{stats.skipped} resumed, {stats.failed} failed")
        for oid, band, msg in stats.failures:
            click.echo(f"  FAILED {oid} band {band}: {msg}", err=True)
        failed += stats.failed
    if failed:
        sys.exit(2)


@main.command("rasterize")
@common_options
@click.option("--split", type=click.Choice(SPLITS + ("both",)),
              default="both", show_default=True)
def cmd_rasterize(out_str: str, config_path: str | None, profile: str,
                  split: str) -> None:
    """Write ground-truth occupancy grids for every shape."""
    out = Path(out_str)
    cfg = _resolve_config(out, config_path, profile)
    for name in _split_names(split):
        ids, polys = _load_split(out, name)
        n = runner.rasterize_split(cfg, out, name, ids, polys)
        click.echo(f"{name}: {n} occupancy grids")


@main.command("pack")
@common_options
@click.option("--split", type=click.Choice(SPLITS + ("both",)),
              default="both", show_default=True)
@click.option("--overwrite", is_flag=True,
              help="Replace an existing packed dataset.")
def cmd_pack(out_str: str, config_path: str | None, profile: str,
             split: str, overwrite: bool) -> None:
    """Bundle grids and targets into the undegraded dataset."""
    out = Path(out_str)
    cfg = _resolve_config(out, config_path, profile)
    seed = _stored_seed(out)
    for name in _split_names(split):
        dest = out / "datasets" / name / "full"
        if dest.exists():
            if not overwrite:
                click.echo(f"{name}: {dest} already packed, skipping")
                continue
            import shutil

            shutil.rmtree(dest)
        try:
            path = runner.pack_split(cfg, out, name, _shape_path(out, name),
                                     seed=seed)
        except (FileNotFoundError, ValueError) as exc:
            raise click.ClickException(str(exc))
        click.echo(f"{name}: packed -> {path}")


@main.command("expand")
@common_options
@click.option("--split", type=click.Choice(SPLITS + ("both",)),
              default="both", show_default=True)
@click.option("--overwrite", is_flag=True,
              help="Replace existing derived datasets.")
def cmd_expand(out_str: str, config_path: str | None, profile: str,
               split: str, overwrite: bool) -> None:
    """Derive all 24 degraded dataset variants from the packed parent."""
    out = Path(out_str)
    _resolve_config(out, config_path, profile)
    for name in _split_names(split):
        parent_dir = out / "datasets" / name / "full"
        if not parent_dir.is_dir():
            raise click.ClickException(
                f"{parent_dir} not found; run pack first")
        try:
            written = dataset_mod.expand_matrix(
                parent_dir, out / "datasets" / name, overwrite=overwrite)
        except (FileNotFoundError, ValueError) as exc:
            raise click.ClickException(str(exc))
        click.echo(f"{name}: {len(written)} degraded datasets")


@main.command("evaluate")
@common_options
@click.option("--split", type=click.Choice(SPLITS), default="test",
              show_default=True)
@click.option("--predictions", "predictions_str", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Root holding <slug>/<id>.pred.npy files.")
@click.option("--require-all", is_flag=True,
              help="Fail unless every degradation slug is scored.")
def cmd_evaluate(out_str: str, config_path: str | None, profile: str,
                 split: str, predictions_str: str, require_all: bool) -> None:
    """Score predictions against targets and write the report."""
    out = Path(out_str)
    _resolve_config(out, config_path, profile)
    datasets_root = out / "datasets" / split
    if not datasets_root.is_dir():
        raise click.ClickException(
            f"{datasets_root} not found; run pack and expand first")
    try:
        rep = report_mod.evaluate_matrix(datasets_root, predictions_str,
                                         require_all=require_all)
    except (FileNotFoundError, ValueError) as exc:
        raise click.ClickException(str(exc))
    if not rep.scores:
        raise click.ClickException(
            f"no degradation slug under {predictions_str} matches a dataset")
    report_dir = Path(predictions_str)
    (report_dir / "report.json").write_text(rep.to_json())
    (report_dir / "report.txt").write_text(rep.to_text())
    click.echo(rep.to_text())
    click.echo(f"report -> {report_dir}")


@main.command("run")
@common_options
@click.option("--through", type=click.Choice(STAGES[:-1]), default="expand",
              show_default=True, help="Last stage to execute.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--resume/--no-resume", default=True, show_default=True)
@click.option("--limit", type=int, default=None)
@click.option("--train-per-category", type=int, default=40, show_default=True)
@click.option("--test-per-category", type=int, default=10, show_default=True)
@click.pass_context
def cmd_run(ctx: click.Context, out_str: str, config_path: str | None,
            profile: str, through: str, seed: int, workers: int, resume: bool,
            limit: int | None, train_per_category: int,
            test_per_category: int) -> None:
    """Run every stage up to --through against one output directory."""
    prefix = STAGES[:STAGES.index(through) + 1]
    base = {"out_str": out_str, "config_path": config_path,
            "profile": profile}
    if "gen-shapes" in prefix:
        ctx.invoke(cmd_gen_shapes, seed=seed,
                   train_per_category=train_per_category,
                   test_per_category=test_per_category, **base)
    if "simulate" in prefix:
        ctx.invoke(cmd_simulate, split="both", workers=workers,
                   resume=resume, limit=limit, **base)
    if "rasterize" in prefix:
        ctx.invoke(cmd_rasterize, split="both", **base)
    if "pack" in prefix:
        ctx.invoke(cmd_pack, split="both", overwrite=False, **base)
    if "expand" in prefix:
        ctx.invoke(cmd_expand, split="both", overwrite=False, **base)


def _grid_to_pgm(values: np.ndarray) -> bytes:
    """Map dB levels to 8-bit grey; sentinel pixels come out black."""
    known = values != UNKNOWN_VALUE
    grey = np.zeros(values.shape, dtype=np.uint8)
    if known.any():
        lo = DB_FLOOR
        hi = float(values[known].max())
        span = max(hi - lo, 1e-9)
        scaled = (values[known] - lo) / span
        grey[known] = np.clip(np.rint(1 + scaled * 254), 1, 255).astype(np.uint8)
    header = f"P5\n{values.shape[1]} {values.shape[0]}\n255\n".encode()
    return header + grey.tobytes()


@main.command("dump-grid")
@common_options
@click.option("--split", type=click.Choice(SPLITS), default="training",
              show_default=True)
@click.option("--id", "object_id", required=True)
@click.option("--source", type=int, required=True)
@click.option("--band", type=int, required=True)
@click.option("--dest", required=True, type=click.Path(dir_okay=False),
              help="Basename for <dest>.npy and <dest>.pgm.")
def cmd_dump_grid(out_str: str, config_path: str | None, profile: str,
                  split: str, object_id: str, source: int, band: int,
                  dest: str) -> None:
    """Export one simulated loudness grid with a viewable image."""
    out = Path(out_str)
    cfg = _resolve_config(out, config_path, profile)
    try:
        values = runner._load_grid(out, split, object_id, source, band,
                                   cfg.digest())
    except (FileNotFoundError, ValueError) as exc:
        raise click.ClickException(str(exc))
    base = Path(dest)
    base.parent.mkdir(parents=True, exist_ok=True)
    np.save(base.with_suffix(".npy"), values)
    base.with_suffix(".pgm").write_bytes(_grid_to_pgm(values))
    click.echo(f"wrote {base.with_suffix('.npy')} and {base.with_suffix('.pgm')}")


@main.command("dump-surface")
@common_options
@click.option("--split", type=click.Choice(SPLITS), default="training",
              show_default=True)
@click.option("--id", "object_id", required=True)
@click.option("--band", type=int, required=True)
@click.option("--freq-index", type=int, default=0, show_default=True,
              help="Quadrature node within the band.")
@click.option("--dest", required=True, type=click.Path(dir_okay=False),
              help="Basename for <dest>.npz.")
def cmd_dump_surface(out_str: str, config_path: str | None, profile: str,
                     split: str, object_id: str, band: int, freq_index: int,
                     dest: str) -> None:
    """Re-solve one object at one frequency and export the surface trace."""
    out = Path(out_str)
    cfg = _resolve_config(out, config_path, profile)
    ids, polys = _load_split(out, split)
    if object_id not in ids:
        raise click.ClickException(f"unknown object id {object_id!r}")
    polygon = polys[ids.index(object_id)]
    freqs, _ = quadrature_frequencies(cfg, band)
    if not 0 <= freq_index < len(freqs):
        raise click.ClickException(
            f"--freq-index out of range 0..{len(freqs) - 1}")
    k = freqs[freq_index] / cfg.sound_speed
    lo, hi = cfg.band_edges(band)
    mesh = build_mesh(polygon, hi / cfg.sound_speed,
                      cfg.elements_per_wavelength)
    sources = np.array([cfg.source_position(j)
                        for j in range(cfg.n_sources)])
    solutions = solve_sources(mesh, k, sources)
    base = Path(dest)
    base.parent.mkdir(parents=True, exist_ok=True)
    np.savez(base.with_suffix(".npz"),
             nodes=mesh.nodes,
             midpoints=mesh.midpoints,
             wavenumber=np.array(k),
             node_pressure=np.stack([s.node_pressure for s in solutions]),
             rcond=np.array([s.rcond for s in solutions]))
    click.echo(f"wrote {base.with_suffix('.npz')}")


if __name__ == "__main__":
    main()
