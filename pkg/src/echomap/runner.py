"""Corpus-scale orchestration of the field solver.

The expensive stage is one task per (object, band): a single boundary
mesh and eight factorized solves shared by all sources. Tasks fan out
over a process pool; each worker pins its BLAS to one thread so results
are byte-identical regardless of worker count. Every finished task
leaves one .npy grid plus a .meta.json sidecar per source, written
atomically, so interrupted runs resume by rehashing what is on disk.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .bem import SolverError
from .config import SceneConfig
from .dataset import channel_index, write_dataset
from .loudness import compute_band_grids
from .raster import rasterize
from .shapes import ConvexPolygon, load_shapes

logger = logging.getLogger(__name__)

GRIDS_DIR = "grids"
TARGETS_DIR = "targets"
LOGS_DIR = "logs"


def grid_path(out: Path, split: str, object_id: str, source: int,
              band: int) -> Path:
    return out / GRIDS_DIR / split / f"{object_id}_s{source}_b{band}.npy"


def target_path(out: Path, split: str, object_id: str) -> Path:
    return out / TARGETS_DIR / split / f"{object_id}.npy"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _npy_bytes(arr: np.ndarray) -> bytes:
    import io

    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr), version=(1, 0))
    return buf.getvalue()


def _task_is_done(out: Path, split: str, object_id: str, band: int,
                  sources: range, digest: str) -> bool:
    """A task is complete iff every grid rehashes to its sidecar."""
    for j in sources:
        npy = grid_path(out, split, object_id, j, band)
        meta = npy.with_suffix(".meta.json")
        if not npy.exists() or not meta.exists():
            return False
        try:
            info = json.loads(meta.read_text())
        except json.JSONDecodeError:
            return False
        if info.get("config_digest") != digest:
            return False
        if info.get("status") != "ok":
            return False
        if _sha256(npy) != info.get("npy_sha256"):
            return False
    return True


def _simulate_task(cfg_text: str, vertices: np.ndarray, object_id: str,
                   band: int, out_str: str, split: str) -> dict:
    """Worker body: solve one (object, band) cell and write its grids."""
    with threadpool_limits(limits=1):
        cfg = SceneConfig.from_text(cfg_text)
        out = Path(out_str)
        polygon = ConvexPolygon(vertices=np.asarray(vertices, dtype=np.float64))
        t0 = time.perf_counter()
        grids, diag = compute_band_grids(cfg, polygon, band)
        digest = cfg.digest()
        for grid in grids:
            npy = grid_path(out, split, object_id, grid.source_index, band)
            npy.parent.mkdir(parents=True, exist_ok=True)
            payload = _npy_bytes(grid.values.astype(np.float32))
            _atomic_write(npy, payload)
            meta = {
                "object_id": object_id,
                "source": grid.source_index,
                "band": band,
                "config_digest": digest,
                "npy_sha256": hashlib.sha256(payload).hexdigest(),
                "n_segments": diag.n_segments,
                "min_rcond": diag.min_rcond,
                "status": "ok",
            }
            _atomic_write(npy.with_suffix(".meta.json"),
                          (json.dumps(meta, sort_keys=True, indent=2) + "\n"
                           ).encode())
        return {
            "object_id": object_id,
            "band": band,
            "seconds": time.perf_counter() - t0,
            "n_segments": diag.n_segments,
            "min_rcond": diag.min_rcond,
        }


@dataclasses.dataclass
class SimulateStats:
    completed: int = 0
    skipped: int = 0
    failed: int = 0
    failures: list = dataclasses.field(default_factory=list)


def simulate_split(cfg: SceneConfig, out: str | Path, split: str,
                   ids: list[str], polygons: list[ConvexPolygon],
                   workers: int = 1, resume: bool = True,
                   limit: int | None = None) -> SimulateStats:
    """Run the solver over one split, one task per (object, band)."""
    out = Path(out)
    digest = cfg.digest()
    sources = range(cfg.n_sources)
    if limit is not None:
        ids = ids[:limit]
        polygons = polygons[:limit]

    tasks = []
    stats = SimulateStats()
    for oid, poly in zip(ids, polygons):
        for band in range(cfg.n_bands):
            if resume and _task_is_done(out, split, oid, band, sources, digest):
                stats.skipped += 1
                continue
            tasks.append((oid, poly, band))
    logger.info("simulate %s: %d tasks to run, %d already done", split,
                len(tasks), stats.skipped)
    if not tasks:
        return stats

    log_dir = out / LOGS_DIR
    log_dir.mkdir(parents=True, exist_ok=True)
    log_path = log_dir / f"simulate-{split}.jsonl"
    cfg_text = cfg.to_text()

    def _log(entry: dict) -> None:
        with open(log_path, "a") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    if workers <= 1:
        for oid, poly, band in tasks:
            try:
                entry = _simulate_task(cfg_text, poly.vertices, oid, band,
                                       str(out), split)
                stats.completed += 1
                _log(entry)
                logger.info("done %s band %d (%.1fs)", oid, band,
                            entry["seconds"])
            except SolverError as exc:
                stats.failed += 1
                stats.failures.append((oid, band, str(exc)))
                _log({"object_id": oid, "band": band, "error": str(exc)})
                logger.error("solver failed for %s band %d: %s", oid, band, exc)
        return stats

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(_simulate_task, cfg_text, poly.vertices, oid, band,
                        str(out), split): (oid, band)
            for oid, poly, band in tasks
        }
        for fut in as_completed(futures):
            oid, band = futures[fut]
            exc = fut.exception()
            if exc is None:
                entry = fut.result()
                stats.completed += 1
                _log(entry)
                logger.info("done %s band %d (%.1fs)", oid, band,
                            entry["seconds"])
            elif isinstance(exc, SolverError):
                stats.failed += 1
                stats.failures.append((oid, band, str(exc)))
                _log({"object_id": oid, "band": band, "error": str(exc)})
                logger.error("solver failed for %s band %d: %s", oid, band, exc)
            else:
                raise exc
    return stats


def rasterize_split(cfg: SceneConfig, out: str | Path, split: str,
                    ids: list[str], polygons: list[ConvexPolygon]) -> int:
    """Write one uint8 occupancy grid per object."""
    out = Path(out)
    written = 0
    for oid, poly in zip(ids, polygons):
        grid = rasterize(poly, cfg)
        path = target_path(out, split, oid)
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(path, _npy_bytes(grid.values))
        written += 1
    logger.info("rasterize %s: %d targets", split, written)
    return written


def _load_grid(out: Path, split: str, object_id: str, source: int, band: int,
               digest: str) -> np.ndarray:
    npy = grid_path(out, split, object_id, source, band)
    meta_path = npy.with_suffix(".meta.json")
    if not npy.exists() or not meta_path.exists():
        raise FileNotFoundError(f"missing simulated grid {npy}")
    info = json.loads(meta_path.read_text())
    if info.get("config_digest") != digest:
        raise ValueError(f"{npy}: grid was simulated under a different config")
    data = npy.read_bytes()
    if hashlib.sha256(data).hexdigest() != info.get("npy_sha256"):
        raise ValueError(f"{npy}: checksum mismatch, re-run simulate")
    import io

    return np.lib.format.read_array(io.BytesIO(data))


def pack_split(cfg: SceneConfig, out: str | Path, split: str,
               shapes_path: str | Path, seed: int | None = None) -> Path:
    """Assemble simulated grids and targets into the undegraded dataset."""
    out = Path(out)
    digest = cfg.digest()
    ids, polygons = load_shapes(shapes_path)
    shapes_text = Path(shapes_path).read_text()

    def _records():
        for oid in ids:
            frames = np.empty(
                (cfg.n_sources * cfg.n_bands, cfg.grid_dim, cfg.grid_dim),
                dtype=np.float32)
            for j in range(cfg.n_sources):
                for i in range(cfg.n_bands):
                    frames[channel_index(j, i, cfg.n_bands)] = _load_grid(
                        out, split, oid, j, i, digest)
            target_file = target_path(out, split, oid)
            if not target_file.exists():
                raise FileNotFoundError(f"missing target {target_file}")
            target = np.load(target_file)
            yield oid, frames, target

    channels = [(j, i) for j in range(cfg.n_sources)
                for i in range(cfg.n_bands)]
    dest = out / "datasets" / split / "full"
    write_dataset(dest, cfg, _records(), channels, shapes_text,
                  seed=seed, split=split)
    logger.info("packed %s: %d records -> %s", split, len(ids), dest)
    return dest
