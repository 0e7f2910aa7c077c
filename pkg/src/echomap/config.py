"""Scene configuration: geometry, sources, octave bands, and grids.

A scene is a square measurement region with a smaller concentric square kept
free of probes (objects live there, microphones do not). Monochromatic line
sources sit on a ring far outside the region; per-band loudness images are
sampled on a uniform grid of cell centers.

All lengths are meters, angular frequencies rad/s, wavenumbers rad/m. The
physical frame is centered on the region: the region spans
[-region_side/2, region_side/2]^2 and the inaccessible square
[-inaccessible_side/2, inaccessible_side/2]^2. Grids are indexed row-major
from the minimum corner, y increasing with row index.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterator, Tuple

import numpy as np

__all__ = [
    "SceneConfig",
    "desk_profile",
    "paper_profile",
    "load_config",
    "PROFILES",
]

# Tolerance for "this ratio must be an integer" checks on user input.
_DIVISIBILITY_RTOL = 1e-9


@dataclass(frozen=True)
class SceneConfig:
    """Physical and discretization constants for one scene family.

    Attributes
    ----------
    region_side : float
        Side of the square measurement region Omega (m).
    cell_size : float
        Grid pitch (m). Must divide region_side and inaccessible_side.
    inaccessible_side : float
        Side of the central square holding objects (m).
    source_radius : float
        Distance of every source from the region center (m).
    n_sources : int
        Number of sources, equally spaced in angle starting at +x.
    n_bands : int
        Number of octave bands.
    base_frequency : float
        Band ladder base (Hz); band i spans
        [2*pi*base*2^(i+1), 2*pi*base*2^(i+2)) rad/s.
    sound_speed : float
        Propagation speed c (m/s).
    freq_samples_per_band : int
        Trapezoid nodes per band for the loudness quadrature (>= 2).
    elements_per_wavelength : int
        Boundary mesh density at the highest frequency of interest (>= 4).
    """

    region_side: float = 5.12
    cell_size: float = 0.01
    inaccessible_side: float = 1.0
    source_radius: float = 5.0
    n_sources: int = 8
    n_bands: int = 4
    base_frequency: float = 125.0
    sound_speed: float = 343.0
    freq_samples_per_band: int = 8
    elements_per_wavelength: int = 8

    # -- validation ---------------------------------------------------------

    def __post_init__(self) -> None:
        for name in ("region_side", "cell_size", "inaccessible_side",
                     "source_radius", "base_frequency", "sound_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("n_sources", "n_bands"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.freq_samples_per_band < 2:
            raise ValueError("freq_samples_per_band must be >= 2")
        if self.elements_per_wavelength < 4:
            raise ValueError("elements_per_wavelength must be >= 4")
        if self.inaccessible_side >= self.region_side:
            raise ValueError("inaccessible_side must be smaller than region_side")
        _exact_ratio(self.region_side, self.cell_size, "region_side/cell_size")
        _exact_ratio(self.inaccessible_side, self.cell_size,
                     "inaccessible_side/cell_size")

    # -- derived sizes ------------------------------------------------------

    @property
    def grid_dim(self) -> int:
        """Cells per side of the region grid."""
        return _exact_ratio(self.region_side, self.cell_size, "region grid")

    @property
    def output_dim(self) -> int:
        """Cells per side of the occupancy grid tiling the central square."""
        return _exact_ratio(self.inaccessible_side, self.cell_size,
                            "output grid")

    @property
    def max_wavenumber(self) -> float:
        """k at the top edge of the highest band."""
        return self.band_edges(self.n_bands - 1)[1] / self.sound_speed

    # -- sources and bands --------------------------------------------------

    def source_angle(self, j: int) -> float:
        self._check_source(j)
        return 2.0 * math.pi * j / self.n_sources

    def source_position(self, j: int) -> Tuple[float, float]:
        """Source j location in the centered frame."""
        th = self.source_angle(j)
        return (self.source_radius * math.cos(th),
                self.source_radius * math.sin(th))

    def band_edges(self, i: int) -> Tuple[float, float]:
        """Angular-frequency interval [lo, hi) of octave band i."""
        if not 0 <= i < self.n_bands:
            raise ValueError(f"band index {i} out of range 0..{self.n_bands - 1}")
        lo = 2.0 * math.pi * self.base_frequency * 2.0 ** (i + 1)
        return lo, 2.0 * lo

    def band_top_wavenumber(self, i: int) -> float:
        return self.band_edges(i)[1] / self.sound_speed

    def _check_source(self, j: int) -> None:
        if not 0 <= j < self.n_sources:
            raise ValueError(f"source index {j} out of range 0..{self.n_sources - 1}")

    # -- grids --------------------------------------------------------------

    def grid_axis(self) -> np.ndarray:
        """Cell-center coordinates along one region-grid axis.

        Computed as (i - (n-1)/2) * cell so the coordinate set is exactly
        symmetric under negation; 90-degree scene rotations then permute grid
        points without floating-point drift.
        """
        n = self.grid_dim
        idx = np.arange(n, dtype=np.float64)
        return (idx - (n - 1) / 2.0) * self.cell_size

    def output_axis(self) -> np.ndarray:
        """Cell-center coordinates along one occupancy-grid axis."""
        m = self.output_dim
        idx = np.arange(m, dtype=np.float64)
        return (idx - (m - 1) / 2.0) * self.cell_size

    def inaccessible_index_range(self) -> Tuple[int, int]:
        """Half-open index range [lo, hi) of inaccessible rows/columns.

        A region cell is inaccessible iff its center lies inside the closed
        central square. Solved in index units (center index c + 1/2 against
        square edges at (n -+ m)/2) so boundary cases are exact integer
        decisions, never float ties: lo = ceil((n - m - 1)/2),
        hi = n - lo. When n - m is odd the square's edge bisects a row of
        centers and those centers count as inside (closed square).
        """
        n, m = self.grid_dim, self.output_dim
        lo = -((m + 1 - n) // 2)  # ceil((n - m - 1) / 2)
        return lo, n - lo

    def accessible_mask(self) -> np.ndarray:
        """Boolean (grid_dim, grid_dim) mask, True where probes may sit."""
        n = self.grid_dim
        lo, hi = self.inaccessible_index_range()
        mask = np.ones((n, n), dtype=bool)
        mask[lo:hi, lo:hi] = False
        return mask

    def grid_points(self) -> Tuple[np.ndarray, np.ndarray]:
        """Row-major cell centers and their inaccessible flags.

        Returns (points, inaccessible): points has shape (grid_dim**2, 2)
        with columns (x, y); row r, column c maps to flat index r*grid_dim+c
        and point (axis[c], axis[r]).
        """
        ax = self.grid_axis()
        xx, yy = np.meshgrid(ax, ax)  # yy varies with row
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        return pts, ~self.accessible_mask().ravel()

    # -- serialization ------------------------------------------------------

    def to_text(self) -> str:
        lines = ["# echomap scene configuration"]
        for f in fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SceneConfig":
        values = {}
        for ln, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {ln}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            values[key] = val.strip()
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: dict) -> "SceneConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, val in values.items():
            if key not in known:
                raise ValueError(f"unknown configuration key {key!r}")
            typ = known[key].type
            conv = int if typ == "int" else float
            try:
                kwargs[key] = conv(val) if isinstance(val, str) else conv(val)
            except ValueError as exc:
                raise ValueError(f"bad value for {key!r}: {val!r}") from exc
        return cls(**kwargs)

    def digest(self) -> str:
        """Stable content hash; identical configs hash identically."""
        payload = ";".join(
            f"{f.name}={getattr(self, f.name)!r}" for f in fields(self)
        )
        return hashlib.sha256(payload.encode("ascii")).hexdigest()

    def override(self, **kwargs) -> "SceneConfig":
        return replace(self, **kwargs)

    def iter_band_sources(self) -> Iterator[Tuple[int, int]]:
        """(source j, band i) pairs in canonical channel order."""
        for j in range(self.n_sources):
            for i in range(self.n_bands):
                yield j, i


def desk_profile() -> SceneConfig:
    """Coarse profile sized for a single workstation."""
    return SceneConfig(cell_size=0.04, elements_per_wavelength=6)


def paper_profile() -> SceneConfig:
    """Full-resolution profile (0.01 m cells)."""
    return SceneConfig(cell_size=0.01, elements_per_wavelength=8)


PROFILES = {"desk": desk_profile, "paper": paper_profile}


def load_config(path: str | Path | None, profile: str = "desk") -> SceneConfig:
    """Profile defaults, optionally overridden by keys from a config file."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    base = PROFILES[profile]()
    if path is None:
        return base
    text = Path(path).read_text(encoding="utf-8")
    overrides = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        overrides[key.strip()] = val.strip()
    merged = {f.name: getattr(base, f.name) for f in fields(SceneConfig)}
    for key, val in overrides.items():
        if key not in merged:
            raise ValueError(f"unknown configuration key {key!r}")
        merged[key] = val
    return SceneConfig.from_mapping(merged)


def _exact_ratio(num: float, den: float, what: str) -> int:
    ratio = num / den
    nearest = round(ratio)
    if nearest < 1 or abs(ratio - nearest) > _DIVISIBILITY_RTOL * max(1.0, ratio):
        raise ValueError(f"{what}: {num}/{den} is not a positive integer")
    return int(nearest)
