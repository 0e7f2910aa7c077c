"""Smoothed image distance: oracle agreement, metric axioms, limits."""

import numpy as np
import pytest

from echomap.imed import imed, normalized_imed

from oracles import imed_double_sum


def _random_images(rng, max_side=8, binary=False):
    h = int(rng.integers(1, max_side + 1))
    w = int(rng.integers(1, max_side + 1))
    if binary:
        return (rng.random((h, w)) < 0.5).astype(np.float64), \
            (rng.random((h, w)) < 0.5).astype(np.float64)
    return rng.normal(size=(h, w)), rng.normal(size=(h, w))


def test_matches_double_sum_oracle():
    rng = np.random.default_rng(42)
    for _ in range(60):
        a, b = _random_images(rng)
        assert imed(a, b) == pytest.approx(imed_double_sum(a, b), abs=1e-10)


def test_metric_axioms():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        a, b = _random_images(rng, max_side=6)
        c = rng.normal(size=a.shape)
        dab = imed(a, b)
        assert dab >= 0.0
        assert imed(b, a) == dab
        assert imed(a, a) == 0.0
        # positive-definite kernel: zero distance only for equal images
        if not np.array_equal(a, b):
            assert dab > 0.0
        assert imed(a, c) <= dab + imed(b, c) + 1e-12


def test_small_sigma_limit_is_euclidean():
    rng = np.random.default_rng(3)
    sigma = 1e-3
    for _ in range(20):
        a, b = _random_images(rng)
        if np.array_equal(a, b):
            continue
        eu = np.linalg.norm(a - b)
        scaled = imed(a, b, sigma) * sigma * np.sqrt(2.0 * np.pi)
        assert scaled == pytest.approx(eu, rel=1e-6)
        # normalization cancels the scale entirely
        assert normalized_imed(a, b, sigma) == pytest.approx(
            eu / np.sqrt(a.size), rel=1e-6)


def test_normalizer_and_range():
    for shape in ((1, 1), (5, 5), (7, 3), (25, 25)):
        ones = np.ones(shape)
        zeros = np.zeros(shape)
        assert normalized_imed(ones, zeros) == 1.0
        assert normalized_imed(zeros, ones) == 1.0
    rng = np.random.default_rng(11)
    for _ in range(200):
        a, b = _random_images(rng, binary=True)
        s = normalized_imed(a, b)
        assert 0.0 <= s <= 1.0 + 1e-12


def test_all_binary_pairs_tiny_grid():
    # exhaustive 2x2 check: the normalizing pair maximizes the distance
    imgs = [np.array(bits, dtype=np.float64).reshape(2, 2)
            for bits in np.ndindex(2, 2, 2, 2)]
    best = 0.0
    for a in imgs:
        for b in imgs:
            s = normalized_imed(a, b)
            assert 0.0 <= s <= 1.0 + 1e-12
            best = max(best, s)
    assert best == pytest.approx(1.0, abs=1e-12)


def test_distance_grows_with_displacement():
    # the whole point of the smoothed metric: nearby blobs are closer than
    # distant ones, while plain Euclidean cannot tell them apart
    base = np.zeros((11, 11))
    base[5, 2] = 1.0
    prev = 0.0
    far_limit = np.sqrt(2.0 / (2.0 * np.pi))  # two isolated unit pixels
    for k in (1, 2, 3, 4):
        shifted = np.zeros((11, 11))
        shifted[5, 2 + k] = 1.0
        d = imed(base, shifted)
        assert d > prev
        assert d < far_limit + 1e-12
        assert np.linalg.norm(base - shifted) == pytest.approx(np.sqrt(2.0))
        prev = d


def test_validation():
    with pytest.raises(ValueError):
        imed(np.zeros((3, 3)), np.zeros((3, 4)))
    with pytest.raises(ValueError):
        imed(np.zeros(9), np.zeros(9))
    with pytest.raises(ValueError):
        imed(np.zeros((3, 3)), np.zeros((3, 3)), sigma=0.0)
    with pytest.raises(ValueError):
        normalized_imed(np.zeros((2, 2, 2)), np.zeros((2, 2, 2)))
