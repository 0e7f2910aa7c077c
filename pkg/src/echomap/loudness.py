"""Octave-band loudness maps over the measurement grid.

For one scatterer (or free space), one source, and one octave band, the
band loudness at a grid cell is

    L = 10 log10( (1/W) integral over the band of |p(omega)|^2 domega )

with W the band width. The integral uses a trapezoid rule on equally
spaced frequencies; every frequency requires one boundary solve shared by
all sources, so the engine works band-at-a-time for all sources at once.
Levels are floored at -120 dB, and cells inside the central inaccessible
square carry the UNKNOWN sentinel with an accompanying boolean mask.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time

import numpy as np

from . import bem, special
from .config import SceneConfig
from .shapes import ConvexPolygon

logger = logging.getLogger(__name__)

DB_FLOOR = -120.0
ENERGY_FLOOR = 10.0 ** (DB_FLOOR / 10.0)
UNKNOWN_VALUE = float(np.finfo(np.float32).min)


def quadrature_frequencies(cfg: SceneConfig, band: int
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid nodes and weights covering octave band `band` in omega."""
    lo, hi = cfg.band_edges(band)
    n = cfg.freq_samples_per_band
    omega = np.linspace(lo, hi, n)
    step = (hi - lo) / (n - 1)
    w = np.full(n, step)
    w[0] = w[-1] = 0.5 * step
    return omega, w


def loudness_at(pressures: np.ndarray, band: tuple[float, float]) -> float:
    """Band loudness of one point from its quadrature-node pressures.

    The reduction used for every grid cell: trapezoid-average |p|^2 over
    the band, floored, in dB.
    """
    lo, hi = band
    if hi <= lo:
        raise ValueError("band width must be positive")
    p = np.asarray(pressures)
    if p.ndim != 1 or p.size < 2:
        raise ValueError("need one pressure per quadrature node (>= 2)")
    step = (hi - lo) / (p.size - 1)
    w = np.full(p.size, step)
    w[0] = w[-1] = 0.5 * step
    energy = float(np.sum(w * (p.real ** 2 + p.imag ** 2))) / (hi - lo)
    return 10.0 * math.log10(max(energy, ENERGY_FLOOR))


@dataclasses.dataclass
class LoudnessGrid:
    """Band loudness on the full region grid for one source.

    values holds dB levels at accessible cells and UNKNOWN_VALUE elsewhere;
    mask is True where the value is meaningful.
    """

    values: np.ndarray            # (grid_dim, grid_dim) float64
    mask: np.ndarray              # (grid_dim, grid_dim) bool
    source_index: int
    band_index: int
    config_digest: str = ""

    def __post_init__(self) -> None:
        if self.values.shape != self.mask.shape or self.values.ndim != 2:
            raise ValueError("values and mask must be matching 2-d arrays")

    def masked_values(self) -> np.ndarray:
        return self.values[self.mask]


@dataclasses.dataclass
class BandDiagnostics:
    band_index: int
    n_segments: int
    min_rcond: float
    wall_seconds: float


def compute_band_grids(cfg: SceneConfig, polygon: ConvexPolygon | None,
                       band: int, source_indices: list[int] | None = None,
                       table: special.HankelTable | None = None
                       ) -> tuple[list[LoudnessGrid], BandDiagnostics]:
    """All requested sources' loudness grids for one band of one scene.

    The boundary system is factorized once per frequency and reused across
    sources; the cell coupling matrix is likewise shared, which is where
    the bulk of the work goes.
    """
    if table is None:
        table = special.default_table()
    if source_indices is None:
        source_indices = list(range(cfg.n_sources))
    t0 = time.perf_counter()
    sources = np.array([cfg.source_position(j) for j in source_indices])
    pts, inaccessible = cfg.grid_points()
    acc = ~inaccessible
    acc_pts = pts[acc]

    mesh = None
    if polygon is not None:
        mesh = bem.build_mesh(polygon, cfg.band_top_wavenumber(band),
                              cfg.elements_per_wavelength)

    omega, w = quadrature_frequencies(cfg, band)
    width = cfg.band_edges(band)[1] - cfg.band_edges(band)[0]
    energy = np.zeros((acc_pts.shape[0], sources.shape[0]))
    min_rcond = np.inf
    for om, wq in zip(omega, w):
        k = om / cfg.sound_speed
        if mesh is not None:
            sols = bem.solve_sources(mesh, k, sources, table)
            min_rcond = min(min_rcond, sols[0].rcond)
        else:
            sols = []
        p = bem.total_pressure(mesh, sols, k, sources, acc_pts, table)
        energy += wq * (p.real ** 2 + p.imag ** 2)

    levels = 10.0 * np.log10(np.maximum(energy / width, ENERGY_FLOOR))

    n = cfg.grid_dim
    grids = []
    for col, j in enumerate(source_indices):
        vals = np.full(n * n, UNKNOWN_VALUE)
        vals[acc] = levels[:, col]
        grids.append(LoudnessGrid(values=vals.reshape(n, n),
                                  mask=acc.reshape(n, n).copy(),
                                  source_index=j, band_index=band,
                                  config_digest=cfg.digest()))
    diag = BandDiagnostics(
        band_index=band,
        n_segments=0 if mesh is None else mesh.n_segments,
        min_rcond=float(min_rcond) if np.isfinite(min_rcond) else 1.0,
        wall_seconds=time.perf_counter() - t0,
    )
    logger.debug("band %d done: %d segments, rcond>=%.2e, %.2fs",
                 band, diag.n_segments, diag.min_rcond, diag.wall_seconds)
    return grids, diag


def compute_grid(cfg: SceneConfig, polygon: ConvexPolygon | None,
                 source: int, band: int,
                 table: special.HankelTable | None = None) -> LoudnessGrid:
    """Single (source, band) map; convenience wrapper for inspection paths."""
    grids, _ = compute_band_grids(cfg, polygon, band, [source], table)
    return grids[0]
