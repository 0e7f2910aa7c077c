"""Dataset assembly, degradation matrix, and on-disk layout.

A record pairs a multi-channel loudness image (one channel per source and
band, channel index c = source * n_bands + band) with a binary occupancy
target. A dataset directory holds:

    manifest.json            sorted-key JSON, no timestamps
    shapes.txt               generating polygons, one per line
    records/<id>.input.npy   float32 (C, H, W), little-endian, NPY v1.0
    records/<id>.target.npy  uint8 (M, M), NPY v1.0

Derived datasets keep retained pixels bit-exact and replace masked-out
pixels with the float32 minimum sentinel; the boolean mask semantics stay
authoritative through the channel mask arrays carried in memory and are
reconstructible from the degradation entry in the manifest. A manifest
storage flag selects between full-frame inputs (default) and compact
storage holding only the retained stride lattice; readers reconstruct the
identical full frame either way. Writes are
atomic at directory granularity: content is staged under a ".partial"
name in the same parent and renamed into place only when complete; a
failed build is moved aside to ".quarantine" instead of being left
half-written at the final name.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import logging
import os
import shutil
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .config import SceneConfig
from .loudness import UNKNOWN_VALUE, LoudnessGrid

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
SHAPES_NAME = "shapes.txt"
RECORDS_DIR = "records"
DATASET_KIND = "loudness-occupancy-dataset"
FORMAT_VERSION = 1

BAND_GROUPS = {"low": (0, 1), "high": (2, 3), "full": (0, 1, 2, 3)}
SOURCE_COUNTS = (8, 4)
SUBSAMPLING_FACTORS = (1, 2, 4, 8)


def channel_index(source: int, band: int, n_bands: int) -> int:
    return source * n_bands + band


@dataclasses.dataclass
class ChannelImage:
    """Float32 stack of per-(source, band) loudness maps plus pixel mask."""

    object_id: str
    data: np.ndarray                     # (C, H, W) float32
    mask: np.ndarray                     # (H, W) bool, True = meaningful
    channels: list[tuple[int, int]]      # (source, band) per channel

    def __post_init__(self) -> None:
        if self.data.ndim != 3 or self.data.dtype != np.float32:
            raise ValueError("channel image must be float32 with shape (C, H, W)")
        if self.mask.shape != self.data.shape[1:]:
            raise ValueError("mask must match the image plane")
        if len(self.channels) != self.data.shape[0]:
            raise ValueError("channel descriptor count must match planes")


def assemble(object_id: str, grids: Sequence[LoudnessGrid],
             cfg: SceneConfig) -> ChannelImage:
    """Stack per-source/band grids into canonical channel order."""
    by_key = {(g.source_index, g.band_index): g for g in grids}
    expected = list(cfg.iter_band_sources())
    missing = [key for key in expected if key not in by_key]
    if missing:
        raise ValueError(f"missing loudness grids for {missing}")
    planes = []
    mask = None
    for j, i in expected:
        g = by_key[(j, i)]
        planes.append(np.asarray(g.values, dtype=np.float32))
        mask = g.mask if mask is None else (mask & g.mask)
    return ChannelImage(object_id=object_id,
                        data=np.stack(planes, axis=0),
                        mask=mask.copy(),
                        channels=expected)


@dataclasses.dataclass(frozen=True)
class DegradationSpec:
    """One cell of the degradation matrix.

    band_group picks which octave bands survive, source_count how many
    sources (8 keeps all, 4 keeps every other one), subsampling the spatial
    stride: pixels whose row and column are both multiples of the stride
    stay, everything else becomes UNKNOWN.
    """

    band_group: str
    source_count: int
    subsampling: int

    def __post_init__(self) -> None:
        if self.band_group not in BAND_GROUPS:
            raise ValueError(f"unknown band group {self.band_group!r}")
        if self.source_count not in SOURCE_COUNTS:
            raise ValueError(f"source count must be one of {SOURCE_COUNTS}")
        if self.subsampling not in SUBSAMPLING_FACTORS:
            raise ValueError(
                f"subsampling must be one of {SUBSAMPLING_FACTORS}")

    @property
    def bands(self) -> tuple[int, ...]:
        return BAND_GROUPS[self.band_group]

    def sources(self, n_sources: int) -> tuple[int, ...]:
        if self.source_count == 8:
            return tuple(range(n_sources))
        return tuple(range(0, n_sources, 2))

    @property
    def slug(self) -> str:
        return f"{self.band_group}_s{self.source_count}_ss{self.subsampling}"

    def to_mapping(self) -> dict:
        return {"band_group": self.band_group,
                "source_count": self.source_count,
                "subsampling": self.subsampling,
                "slug": self.slug}

    @classmethod
    def from_mapping(cls, m: dict) -> "DegradationSpec":
        return cls(band_group=m["band_group"],
                   source_count=int(m["source_count"]),
                   subsampling=int(m["subsampling"]))


def all_degradations() -> list[DegradationSpec]:
    """The full matrix in canonical order."""
    out = []
    for group in ("low", "high", "full"):
        for count in SOURCE_COUNTS:
            for step in SUBSAMPLING_FACTORS:
                out.append(DegradationSpec(group, count, step))
    return out


def degrade(img: ChannelImage, spec: DegradationSpec,
            cfg: SceneConfig) -> ChannelImage:
    """Derive a degraded view; retained pixels are copied bit-exact."""
    keep = [(j, i) for (j, i) in img.channels
            if j in spec.sources(cfg.n_sources) and i in spec.bands]
    idx = [img.channels.index(ch) for ch in keep]
    data = img.data[idx].copy()
    h, w = img.mask.shape
    stride = np.zeros((h, w), dtype=bool)
    stride[::spec.subsampling, ::spec.subsampling] = True
    mask = img.mask & stride
    data[:, ~mask] = np.float32(UNKNOWN_VALUE)
    return ChannelImage(object_id=img.object_id, data=data,
                        mask=mask, channels=keep)


# ---------------------------------------------------------------------------
# serialization


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.lib.format.write_array(buf, arr, version=(1, 0))
    return buf.getvalue()


def _write_record_file(path: Path, arr: np.ndarray) -> str:
    data = _npy_bytes(arr)
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def write_dataset(path: str | Path, cfg: SceneConfig,
                  records: Iterable[tuple[str, np.ndarray, np.ndarray]],
                  channels: Sequence[tuple[int, int]],
                  shapes_text: str,
                  degradation: DegradationSpec | None = None,
                  parent_manifest_sha256: str | None = None,
                  seed: int | None = None,
                  split: str | None = None,
                  storage: str = "full_frame") -> Path:
    """Write a complete dataset directory atomically.

    records yields (object_id, input float32 (C, H, W), target uint8) with
    the input at full frame size. storage "full_frame" stores it as given;
    "compact" stores only the retained stride lattice (rows and columns at
    multiples of the degradation's subsampling factor) and readers
    reconstruct the sentinel-filled full frame. The destination must not
    already exist.
    """
    if storage not in ("full_frame", "compact"):
        raise ValueError(f"unknown storage mode {storage!r}")
    stride = 1 if degradation is None else degradation.subsampling
    path = Path(path)
    if path.exists():
        raise FileExistsError(f"dataset already exists: {path}")
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.parent / (path.name + ".partial")
    if tmp.exists():
        shutil.rmtree(tmp)
    try:
        (tmp / RECORDS_DIR).mkdir(parents=True)
        entries = []
        n_channels = len(channels)
        for object_id, inp, target in records:
            if storage == "compact":
                inp = inp[:, ::stride, ::stride]
            inp = np.ascontiguousarray(inp, dtype="<f4")
            target = np.ascontiguousarray(target, dtype=np.uint8)
            if inp.shape[0] != n_channels:
                raise ValueError(
                    f"{object_id}: {inp.shape[0]} planes, expected {n_channels}")
            in_name = f"{RECORDS_DIR}/{object_id}.input.npy"
            tg_name = f"{RECORDS_DIR}/{object_id}.target.npy"
            in_sha = _write_record_file(tmp / in_name, inp)
            tg_sha = _write_record_file(tmp / tg_name, target)
            entries.append({"id": object_id,
                            "input": in_name, "input_sha256": in_sha,
                            "target": tg_name, "target_sha256": tg_sha})
        entries.sort(key=lambda e: e["id"])
        manifest = {
            "kind": DATASET_KIND,
            "format_version": FORMAT_VERSION,
            "config": {"digest": cfg.digest(), "text": cfg.to_text()},
            "grid": {"input_dim": cfg.grid_dim, "output_dim": cfg.output_dim},
            "channels": [{"index": c, "source": j, "band": i}
                         for c, (j, i) in enumerate(channels)],
            "degradation": None if degradation is None else degradation.to_mapping(),
            "storage": storage,
            "parent_manifest_sha256": parent_manifest_sha256,
            "count": len(entries),
            "records": entries,
            "provenance": {"tool": "echomap", "seed": seed, "split": split},
        }
        (tmp / SHAPES_NAME).write_text(shapes_text, encoding="utf-8")
        (tmp / MANIFEST_NAME).write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n",
            encoding="utf-8")
        os.replace(tmp, path)
    except BaseException:
        quarantine = path.parent / (path.name + ".quarantine")
        if quarantine.exists():
            shutil.rmtree(quarantine)
        if tmp.exists():
            os.replace(tmp, quarantine)
            logger.error("dataset build failed; partial content moved to %s",
                         quarantine)
        raise
    return path


class Dataset:
    """Read-side handle: manifest plus lazy record loaders."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        manifest_path = self.path / MANIFEST_NAME
        self.manifest_bytes = manifest_path.read_bytes()
        self.manifest = json.loads(self.manifest_bytes.decode("utf-8"))
        if self.manifest.get("kind") != DATASET_KIND:
            raise ValueError(f"{path}: not a dataset directory")
        self.config = SceneConfig.from_text(self.manifest["config"]["text"])
        if self.config.digest() != self.manifest["config"]["digest"]:
            raise ValueError(f"{path}: config digest mismatch")
        self._by_id = {e["id"]: e for e in self.manifest["records"]}

    @property
    def record_ids(self) -> list[str]:
        return [e["id"] for e in self.manifest["records"]]

    @property
    def channels(self) -> list[tuple[int, int]]:
        return [(c["source"], c["band"]) for c in self.manifest["channels"]]

    @property
    def degradation(self) -> DegradationSpec | None:
        d = self.manifest.get("degradation")
        return None if d is None else DegradationSpec.from_mapping(d)

    def manifest_sha256(self) -> str:
        return hashlib.sha256(self.manifest_bytes).hexdigest()

    def _load(self, name: str, expect_sha: str | None, verify: bool) -> np.ndarray:
        data = (self.path / name).read_bytes()
        if verify and expect_sha is not None:
            got = hashlib.sha256(data).hexdigest()
            if got != expect_sha:
                raise ValueError(f"{name}: checksum mismatch")
        return np.lib.format.read_array(io.BytesIO(data))

    @property
    def storage(self) -> str:
        return self.manifest.get("storage", "full_frame")

    def load_input(self, object_id: str, verify: bool = False,
                   frame: str = "full") -> np.ndarray:
        """Input stack for one record.

        frame "full" always yields the sentinel-filled full-frame image,
        reconstructing it when the dataset uses compact storage; "stored"
        returns the on-disk array as is.
        """
        if frame not in ("full", "stored"):
            raise ValueError(f"unknown frame mode {frame!r}")
        e = self._by_id[object_id]
        arr = self._load(e["input"], e.get("input_sha256"), verify)
        if frame == "stored" or self.storage == "full_frame":
            return arr
        spec = self.degradation
        stride = 1 if spec is None else spec.subsampling
        dim = self.manifest["grid"]["input_dim"]
        full = np.full((arr.shape[0], dim, dim), np.float32(UNKNOWN_VALUE),
                       dtype=np.float32)
        full[:, ::stride, ::stride] = arr
        return full

    def load_target(self, object_id: str, verify: bool = False) -> np.ndarray:
        e = self._by_id[object_id]
        return self._load(e["target"], e.get("target_sha256"), verify)

    def iter_records(self, verify: bool = False
                     ) -> Iterator[tuple[str, np.ndarray, np.ndarray]]:
        for rid in self.record_ids:
            yield rid, self.load_input(rid, verify), self.load_target(rid, verify)

    def shapes_text(self) -> str:
        return (self.path / SHAPES_NAME).read_text(encoding="utf-8")


def mask_from_dataset(ds: Dataset) -> np.ndarray:
    """Reconstruct the pixel mask implied by a dataset's degradation."""
    cfg = ds.config
    mask = cfg.accessible_mask()
    spec = ds.degradation
    if spec is not None:
        stride = np.zeros_like(mask)
        stride[::spec.subsampling, ::spec.subsampling] = True
        mask = mask & stride
    return mask


def expand_matrix(parent: str | Path, out_root: str | Path,
                  overwrite: bool = False,
                  progress: Callable[[str], None] | None = None,
                  storage: str = "full_frame") -> list[Path]:
    """Write all degraded variants of a parent dataset under out_root."""
    ds = Dataset(parent)
    if ds.degradation is not None:
        raise ValueError("expansion must start from an undegraded dataset")
    out_root = Path(out_root)
    parent_sha = ds.manifest_sha256()
    shapes_text = ds.shapes_text()
    seed = ds.manifest.get("provenance", {}).get("seed")
    split = ds.manifest.get("provenance", {}).get("split")
    cfg = ds.config
    paths = []
    for spec in all_degradations():
        dest = out_root / spec.slug
        if dest.exists():
            if not overwrite:
                existing = Dataset(dest)
                if existing.manifest.get("parent_manifest_sha256") == parent_sha:
                    logger.info("keeping existing %s", dest)
                    paths.append(dest)
                    if progress:
                        progress(f"kept {spec.slug}")
                    continue
            shutil.rmtree(dest)

        def degraded_records():
            for rid in ds.record_ids:
                img = ChannelImage(object_id=rid, data=ds.load_input(rid),
                                   mask=cfg.accessible_mask(),
                                   channels=list(cfg.iter_band_sources()))
                out = degrade(img, spec, cfg)
                yield rid, out.data, ds.load_target(rid)

        keep_channels = [(j, i) for (j, i) in cfg.iter_band_sources()
                         if j in spec.sources(cfg.n_sources) and i in spec.bands]
        write_dataset(dest, cfg, degraded_records(), keep_channels,
                      shapes_text, degradation=spec,
                      parent_manifest_sha256=parent_sha,
                      seed=seed, split=split, storage=storage)
        paths.append(dest)
        if progress:
            progress(f"wrote {spec.slug}")
    return paths
