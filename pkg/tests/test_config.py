"""Scene configuration: geometry, bands, serialization, digests."""

import math

import numpy as np
import pytest

from echomap.config import PROFILES, SceneConfig, desk_profile, load_config


def test_default_profile_dimensions():
    cfg = SceneConfig()
    assert cfg.grid_dim == 512
    assert cfg.output_dim == 100
    desk = desk_profile()
    assert desk.grid_dim == 128
    assert desk.output_dim == 25


def test_source_positions_exact():
    cfg = SceneConfig()
    assert cfg.source_position(0) == (5.0, 0.0)
    x2, y2 = cfg.source_position(2)
    assert abs(x2) < 1e-12 and y2 == pytest.approx(5.0, abs=1e-12)
    x4, y4 = cfg.source_position(4)
    assert x4 == pytest.approx(-5.0, abs=1e-12) and abs(y4) < 1e-12


def test_source_spacing_uniform():
    cfg = SceneConfig()
    angles = [cfg.source_angle(j) for j in range(cfg.n_sources)]
    gaps = np.diff(angles)
    assert np.allclose(gaps, 2 * math.pi / cfg.n_sources, rtol=0, atol=1e-15)


def test_source_index_out_of_range():
    cfg = SceneConfig()
    with pytest.raises(ValueError):
        cfg.source_position(8)
    with pytest.raises(ValueError):
        cfg.source_position(-1)


def test_band_edges_octaves():
    cfg = SceneConfig()
    lo0, hi0 = cfg.band_edges(0)
    assert lo0 == pytest.approx(2 * math.pi * 250.0, rel=1e-15)
    assert hi0 == pytest.approx(2 * math.pi * 500.0, rel=1e-15)
    lo3, hi3 = cfg.band_edges(3)
    assert lo3 == pytest.approx(2 * math.pi * 2000.0, rel=1e-15)
    assert hi3 == pytest.approx(2 * math.pi * 4000.0, rel=1e-15)
    for i in range(cfg.n_bands):
        lo, hi = cfg.band_edges(i)
        assert hi / lo == pytest.approx(2.0, rel=1e-15)


def test_band_edges_tile_without_gaps():
    cfg = SceneConfig()
    for i in range(cfg.n_bands - 1):
        assert cfg.band_edges(i)[1] == pytest.approx(cfg.band_edges(i + 1)[0],
                                                     rel=1e-15)
    with pytest.raises(ValueError):
        cfg.band_edges(cfg.n_bands)


def test_grid_points_counts_and_flags():
    cfg = SceneConfig(region_side=0.04, cell_size=0.01, inaccessible_side=0.02)
    pts, inaccessible = cfg.grid_points()
    assert pts.shape == (16, 2)
    assert int(inaccessible.sum()) == 4
    # row-major from the minimum corner: first point in the min corner cell
    assert pts[0] == pytest.approx([-0.015, -0.015], abs=1e-15)
    assert pts[1][0] == pytest.approx(-0.005, abs=1e-15)


def test_grid_points_paper_profile_inaccessible_block():
    cfg = SceneConfig()  # paper profile
    _, inaccessible = cfg.grid_points()
    assert int(inaccessible.sum()) == 100 * 100


def test_grid_points_desk_profile_closed_square_straddles_centers():
    # 128 even / 25 odd: the central square boundary passes through cell
    # centers, and the closed-square rule marks one extra row/column.
    cfg = desk_profile()
    _, inaccessible = cfg.grid_points()
    assert int(inaccessible.sum()) == 26 * 26


def test_grid_point_set_rotation_invariant():
    cfg = desk_profile()
    pts, _ = cfg.grid_points()
    rotated = np.stack([-pts[:, 1], pts[:, 0]], axis=1)
    a = set(map(tuple, np.round(pts, 9)))
    b = set(map(tuple, np.round(rotated, 9)))
    assert a == b


def test_invalid_configs_rejected():
    with pytest.raises(ValueError):
        SceneConfig(region_side=5.0, cell_size=0.03)  # non-integer grid
    with pytest.raises(ValueError):
        SceneConfig(inaccessible_side=0.333)  # not a multiple of cell_size
    with pytest.raises(ValueError):
        SceneConfig(inaccessible_side=6.0)  # larger than region
    with pytest.raises(ValueError):
        SceneConfig(freq_samples_per_band=1)
    with pytest.raises(ValueError):
        SceneConfig(elements_per_wavelength=3)
    with pytest.raises(ValueError):
        SceneConfig(n_sources=0)


def test_text_round_trip_and_digest_stability():
    cfg = desk_profile()
    text = cfg.to_text()
    back = SceneConfig.from_text(text)
    assert back == cfg
    assert back.digest() == cfg.digest()
    assert SceneConfig().digest() != cfg.digest()


def test_load_config_profile_and_overrides(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("freq_samples_per_band = 4\n")
    cfg = load_config(path, "desk")
    assert cfg.freq_samples_per_band == 4
    assert cfg.cell_size == desk_profile().cell_size
    assert load_config(None, "paper") == SceneConfig()
    with pytest.raises(ValueError):
        load_config(None, "nope")
    bad = tmp_path / "bad.txt"
    bad.write_text("not_a_key = 3\n")
    with pytest.raises(ValueError):
        load_config(bad, "desk")


def test_profiles_registry():
    assert set(PROFILES) == {"desk", "paper"}


def test_iter_band_sources_canonical_order():
    cfg = desk_profile()
    order = list(cfg.iter_band_sources())
    assert order[0] == (0, 0)
    assert order[1] == (0, 1)
    assert order[cfg.n_bands] == (1, 0)
    assert len(order) == cfg.n_sources * cfg.n_bands


def test_accessible_mask_matches_grid_flags():
    cfg = desk_profile()
    pts, inaccessible = cfg.grid_points()
    mask = cfg.accessible_mask()
    assert mask.shape == (cfg.grid_dim, cfg.grid_dim)
    assert np.array_equal(mask.ravel(), ~inaccessible)


def test_max_wavenumber_is_top_band_edge():
    cfg = SceneConfig()
    assert cfg.max_wavenumber == pytest.approx(
        cfg.band_edges(cfg.n_bands - 1)[1] / cfg.sound_speed, rel=1e-15)
