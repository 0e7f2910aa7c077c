"""Shared fixtures: tiny scene config, fixture polygons, Hankel table."""

from __future__ import annotations

import numpy as np
import pytest

from echomap import shapes
from echomap.config import SceneConfig, desk_profile, paper_profile
from echomap.special import default_table


@pytest.fixture(scope="session")
def tiny_cfg() -> SceneConfig:
    """Coarse everything: 16x16 region grid, 5x5 output, 2-node quadrature."""
    return SceneConfig(region_side=3.2, cell_size=0.2, inaccessible_side=1.0,
                       source_radius=5.0, n_sources=8, n_bands=4,
                       base_frequency=125.0, sound_speed=343.0,
                       freq_samples_per_band=2, elements_per_wavelength=4)


@pytest.fixture(scope="session")
def desk_cfg() -> SceneConfig:
    return desk_profile()


@pytest.fixture(scope="session")
def paper_cfg() -> SceneConfig:
    return paper_profile()


@pytest.fixture(scope="session")
def table():
    return default_table()


@pytest.fixture(scope="session")
def fixture_polygons() -> list[shapes.ConvexPolygon]:
    """Five polygons, one per category, drawn deterministically."""
    rng = np.random.default_rng(np.random.PCG64(1234))
    polys = []
    for cat in (3, 4, 5, 6, 7):
        p = shapes.generate_polygon(cat, 0.45, rng)
        polys.append(shapes.translate_polygon(p, rng))
    return polys


@pytest.fixture(scope="session")
def fixture_test_split(desk_cfg) -> list[shapes.ConvexPolygon]:
    """The 50-polygon desk test population (10 per category, 4 radii)."""
    spec = shapes.test_spec(10, seed=99)
    return shapes.generate_split(spec, desk_cfg)


def synthetic_records(cfg: SceneConfig, ids, seed=0):
    """Deterministic fake (id, input, target) triples shaped like real ones.

    Inputs carry plausible levels at accessible pixels and the sentinel
    elsewhere, so degradation expectations are exact.
    """
    from echomap.loudness import UNKNOWN_VALUE

    rng = np.random.default_rng(seed)
    acc = cfg.accessible_mask()
    n_ch = cfg.n_sources * cfg.n_bands
    out = []
    for rid in ids:
        data = rng.uniform(-80.0, -20.0,
                           size=(n_ch, cfg.grid_dim, cfg.grid_dim))
        data = data.astype(np.float32)
        data[:, ~acc] = np.float32(UNKNOWN_VALUE)
        target = (rng.random((cfg.output_dim, cfg.output_dim)) < 0.4)
        out.append((rid, data, target.astype(np.uint8)))
    return out


@pytest.fixture(scope="session")
def tiny_parent_dataset(tmp_path_factory, tiny_cfg):
    """An undegraded 3-record dataset on disk, for reader/expansion tests."""
    from echomap.dataset import write_dataset

    root = tmp_path_factory.mktemp("parent")
    path = root / "full"
    records = synthetic_records(tiny_cfg, ["obj_a", "obj_b", "obj_c"], seed=7)
    write_dataset(path, tiny_cfg, records,
                  list(tiny_cfg.iter_band_sources()),
                  shapes_text="obj_a 3 0 0 1 0 0 1\n",
                  seed=123, split="test")
    return path
