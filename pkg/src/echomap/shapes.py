"""Random convex polygon populations for the object square.

Polygons are drawn per category (vertex count 3..7) by sampling sorted
angles on a circle with a minimum angular separation, then optionally
scaling about the centroid and translating inside the central square.
Training and test splits differ: training shapes start on the inscribed
circle of the central square and are scaled by a uniform factor; test
shapes use a fixed ladder of circle radii and no scaling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Tuple

import numpy as np

from .config import SceneConfig

logger = logging.getLogger(__name__)

__all__ = [
    "ConvexPolygon",
    "ShapeSetSpec",
    "generate_polygon",
    "scale_polygon",
    "translate_polygon",
    "polygon_alignment_distance",
    "generate_split",
    "save_shapes",
    "load_shapes",
]

DEFAULT_CATEGORIES = (3, 4, 5, 6, 7)
TEST_RADII = (0.30, 0.35, 0.40, 0.45)
SCALE_RANGE = (0.6, 1.0)

# Redraw budgets; generation is rejection-sampled and must terminate loudly.
_MAX_ANGLE_TRIES = 200
_MAX_DISJOINT_TRIES = 100


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Strictly convex polygon, CCW vertices, inside the closed object square.

    vertices: (n, 2) float64 array in meters, centered frame.
    """

    vertices: np.ndarray
    bounds_half: float = 0.5  # half-side of the square that must contain it

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("vertices must be an (n>=3, 2) array")
        object.__setattr__(self, "vertices", v)
        cross = _edge_crosses(v)
        if not np.all(cross > 0.0):
            raise ValueError("vertices must be strictly convex and CCW")
        if np.max(np.abs(v)) > self.bounds_half + 1e-9:
            raise ValueError("polygon escapes the object square")

    @property
    def category(self) -> int:
        return self.vertices.shape[0]

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def perimeter(self) -> float:
        d = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.sum(np.hypot(d[:, 0], d[:, 1])))

    @property
    def centroid(self) -> np.ndarray:
        v, w = self.vertices, np.roll(self.vertices, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        return (v + w).T @ cross / (6.0 * self.area)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Closed-polygon membership for an (..., 2) array of points."""
        pts = np.asarray(points, dtype=np.float64)
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        # signed distance side test against every edge, inside = left of all
        rel = pts[..., None, :] - v  # (..., n, 2)
        cross = e[:, 0] * rel[..., 1] - e[:, 1] * rel[..., 0]
        return np.all(cross >= 0.0, axis=-1)


def _edge_crosses(v: np.ndarray) -> np.ndarray:
    e = np.roll(v, -1, axis=0) - v
    f = np.roll(e, -1, axis=0)
    return e[:, 0] * f[:, 1] - e[:, 1] * f[:, 0]


@dataclass(frozen=True)
class ShapeSetSpec:
    """Recipe for one population split."""

    split: str  # "training" or "test"
    instances_per_category: int
    categories: Tuple[int, ...] = DEFAULT_CATEGORIES
    circle_radii: Tuple[float, ...] = (0.5,)
    scaling_enabled: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.split not in ("training", "test"):
            raise ValueError("split must be 'training' or 'test'")
        if self.instances_per_category < 1:
            raise ValueError("instances_per_category must be >= 1")
        if any(c < 3 for c in self.categories):
            raise ValueError("categories must be >= 3 vertices")
        if any(not 0 < r <= 0.5 for r in self.circle_radii):
            raise ValueError("circle radii must lie in (0, 0.5]")

    @property
    def total(self) -> int:
        return self.instances_per_category * len(self.categories)


def training_spec(instances_per_category: int, seed: int) -> ShapeSetSpec:
    return ShapeSetSpec("training", instances_per_category, seed=seed)


def test_spec(instances_per_category: int, seed: int) -> ShapeSetSpec:
    return ShapeSetSpec("test", instances_per_category,
                        circle_radii=TEST_RADII, scaling_enabled=False,
                        seed=seed)


# ---------------------------------------------------------------------------
# elementary draws


def generate_polygon(category: int, radius: float,
                     rng: np.random.Generator) -> ConvexPolygon:
    """Sample a polygon with `category` vertices on a circle about origin.

    Angles are uniform on [0, 2pi), sorted, and redrawn until every cyclic
    gap is at least 2pi/(4*category); this keeps shapes from degenerating
    into slivers while leaving plenty of variety.
    """
    if category < 3:
        raise ValueError("category must be >= 3")
    min_gap = 2.0 * math.pi / (4.0 * category)
    for _ in range(_MAX_ANGLE_TRIES):
        th = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=category))
        gaps = np.diff(th, append=th[0] + 2.0 * math.pi)
        if np.min(gaps) >= min_gap:
            verts = radius * np.column_stack([np.cos(th), np.sin(th)])
            return ConvexPolygon(verts)
    raise RuntimeError(
        f"no angle draw met the separation bound after {_MAX_ANGLE_TRIES} tries"
    )


def scale_polygon(p: ConvexPolygon, factor: float | None,
                  rng: np.random.Generator | None = None) -> ConvexPolygon:
    """Scale about the centroid; factor None draws uniform from SCALE_RANGE.

    A drawn factor whose result escapes the object square is redrawn (cannot
    happen for factors <= 1 about an interior point, but the guard keeps the
    documented range safe to widen).
    """
    c = p.centroid
    lo, hi = SCALE_RANGE
    for _ in range(_MAX_ANGLE_TRIES):
        f = rng.uniform(lo, hi) if factor is None else factor
        verts = c + f * (p.vertices - c)
        if np.max(np.abs(verts)) <= p.bounds_half:
            return ConvexPolygon(verts, p.bounds_half)
        if factor is not None:
            raise ValueError(f"scale factor {factor} pushes polygon outside bounds")
    raise RuntimeError("no scale draw kept the polygon inside bounds")


def translate_polygon(p: ConvexPolygon,
                      rng: np.random.Generator) -> ConvexPolygon:
    """Uniform random offset keeping the polygon in the object square.

    The feasible offset box can be degenerate (polygon touching opposite
    sides); uniform draws on a zero-width interval return its endpoint.
    """
    h = p.bounds_half
    xmin, ymin = p.vertices.min(axis=0)
    xmax, ymax = p.vertices.max(axis=0)
    dx = _uniform_on(rng, -h - xmin, h - xmax)
    dy = _uniform_on(rng, -h - ymin, h - ymax)
    return ConvexPolygon(p.vertices + np.array([dx, dy]), p.bounds_half)


def _uniform_on(rng: np.random.Generator, lo: float, hi: float) -> float:
    if hi < lo:  # numerical slack: clamp a hair of negative width
        lo = hi = 0.5 * (lo + hi)
    return float(rng.uniform(lo, hi)) if hi > lo else lo


def polygon_alignment_distance(p: ConvexPolygon, q: ConvexPolygon) -> float:
    """Max vertex distance under the best cyclic vertex correspondence.

    Infinity when vertex counts differ (shapes of different category never
    collide by definition).
    """
    if p.category != q.category:
        return math.inf
    best = math.inf
    for shift in range(q.category):
        d = np.linalg.norm(p.vertices - np.roll(q.vertices, shift, axis=0),
                           axis=1)
        best = min(best, float(np.max(d)))
    return best


# ---------------------------------------------------------------------------
# split generation


def generate_split(spec: ShapeSetSpec, cfg: SceneConfig,
                   avoid: Sequence[ConvexPolygon] = ()) -> list[ConvexPolygon]:
    """Draw a full split, category-balanced, disjoint from `avoid`.

    A candidate is discarded when its best-aligned vertex distance to any
    same-category member of `avoid` (or of the split so far) drops below one
    cell, i.e. when the two shapes would rasterize near-identically.
    """
    rng = np.random.default_rng(np.random.PCG64(spec.seed))
    threshold = cfg.cell_size
    out: list[ConvexPolygon] = []
    for category in spec.categories:
        for t in range(spec.instances_per_category):
            radius = spec.circle_radii[t % len(spec.circle_radii)]
            for attempt in range(_MAX_DISJOINT_TRIES):
                poly = generate_polygon(category, radius, rng)
                if spec.scaling_enabled:
                    poly = scale_polygon(poly, None, rng)
                poly = translate_polygon(poly, rng)
                clashes = (
                    _min_distance(poly, avoid) < threshold
                    or _min_distance(poly, out) < threshold
                )
                if not clashes:
                    out.append(poly)
                    break
            else:
                raise RuntimeError(
                    f"category {category}: could not place instance {t} "
                    f"disjointly after {_MAX_DISJOINT_TRIES} draws"
                )
    logger.info("generated %s split: %d polygons", spec.split, len(out))
    return out


def _min_distance(p: ConvexPolygon, others: Sequence[ConvexPolygon]) -> float:
    if not others:
        return math.inf
    return min(polygon_alignment_distance(p, q) for q in others)


# ---------------------------------------------------------------------------
# text round-trip


def save_shapes(polys: Sequence[ConvexPolygon], ids: Sequence[str],
                path: str | Path) -> None:
    """One line per polygon: id, category, CCW vertices at full precision."""
    if len(polys) != len(ids):
        raise ValueError("ids and polygons must align")
    lines = ["# id category x0 y0 x1 y1 ..."]
    for pid, p in zip(ids, polys):
        coords = " ".join(repr(float(c)) for c in p.vertices.ravel())
        lines.append(f"{pid} {p.category} {coords}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_shapes(path: str | Path) -> Tuple[list[str], list[ConvexPolygon]]:
    ids: list[str] = []
    polys: list[ConvexPolygon] = []
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        pid, cat = parts[0], int(parts[1])
        coords = np.array([float(t) for t in parts[2:]], dtype=np.float64)
        if coords.size != 2 * cat:
            raise ValueError(f"{path}:{ln}: expected {2*cat} coordinates")
        ids.append(pid)
        polys.append(ConvexPolygon(coords.reshape(cat, 2)))
    return ids, polys
