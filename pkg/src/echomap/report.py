"""Scoring predicted occupancy grids against dataset targets.

Predictions live in one directory per degradation slug, one
<id>.pred.npy (uint8, output grid shape) per record. Each record is
scored with the normalized smoothed image distance; a report aggregates
per-degradation means into the standard matrix layout (rows: spatial
subsampling, columns: source count crossed with band group).
"""

from __future__ import annotations

import dataclasses
import json
import logging
from pathlib import Path

import numpy as np

from . import imed
from .dataset import (BAND_GROUPS, SOURCE_COUNTS, SUBSAMPLING_FACTORS,
                      Dataset, all_degradations)

logger = logging.getLogger(__name__)

PREDICTION_SUFFIX = ".pred.npy"


@dataclasses.dataclass
class SpecScore:
    slug: str
    mean: float
    per_record: dict[str, float]
    config_digest: str = ""

    @property
    def count(self) -> int:
        return len(self.per_record)


@dataclasses.dataclass
class EvaluationReport:
    scores: dict[str, SpecScore]

    def to_mapping(self) -> dict:
        return {
            "metric": "normalized smoothed image distance",
            "per_spec": {
                slug: {"mean": s.mean, "count": s.count,
                       "config_digest": s.config_digest,
                       "records": dict(sorted(s.per_record.items()))}
                for slug, s in sorted(self.scores.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_mapping(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        groups = list(BAND_GROUPS)
        header_cells = [f"{count}src/{g}" for count in SOURCE_COUNTS
                        for g in groups]
        lines = ["mean normalized image distance (lower is better)", ""]
        lines.append("  ".join(["ssf "] + [f"{h:>10}" for h in header_cells]))
        for step in SUBSAMPLING_FACTORS:
            cells = [f"{step:<4d}"]
            for count in SOURCE_COUNTS:
                for g in groups:
                    slug = f"{g}_s{count}_ss{step}"
                    s = self.scores.get(slug)
                    cells.append(f"{s.mean:>10.4f}" if s else f"{'--':>10}")
            lines.append("  ".join(cells))
        return "\n".join(lines) + "\n"


def score_dataset(dataset_dir: str | Path, predictions_dir: str | Path
                  ) -> SpecScore:
    """Normalized distance of every prediction against its target."""
    ds = Dataset(dataset_dir)
    pred_root = Path(predictions_dir)
    spec = ds.degradation
    slug = spec.slug if spec is not None else "full_s8_ss1"
    per_record = {}
    for rid in ds.record_ids:
        pred_path = pred_root / f"{rid}{PREDICTION_SUFFIX}"
        if not pred_path.exists():
            raise FileNotFoundError(f"missing prediction {pred_path}")
        pred = np.load(pred_path)
        target = ds.load_target(rid)
        if pred.shape != target.shape:
            raise ValueError(
                f"{rid}: prediction shape {pred.shape} != target {target.shape}")
        per_record[rid] = imed.normalized_imed(
            pred.astype(np.float64), target.astype(np.float64))
    mean = float(np.mean(list(per_record.values()))) if per_record else float("nan")
    return SpecScore(slug=slug, mean=mean, per_record=per_record,
                     config_digest=ds.config.digest())


def evaluate_matrix(datasets_root: str | Path, predictions_root: str | Path,
                    require_all: bool = False) -> EvaluationReport:
    """Score every degradation slug that has both a dataset and predictions."""
    datasets_root = Path(datasets_root)
    predictions_root = Path(predictions_root)
    scores: dict[str, SpecScore] = {}
    for spec in all_degradations():
        ds_dir = datasets_root / spec.slug
        pred_dir = predictions_root / spec.slug
        if not ds_dir.is_dir() or not pred_dir.is_dir():
            if require_all:
                raise FileNotFoundError(
                    f"missing dataset or predictions for {spec.slug}")
            continue
        scores[spec.slug] = score_dataset(ds_dir, pred_dir)
        logger.info("scored %s: mean %.4f over %d records", spec.slug,
                    scores[spec.slug].mean, scores[spec.slug].count)
    return EvaluationReport(scores=scores)
