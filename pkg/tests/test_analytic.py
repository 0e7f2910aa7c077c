"""Analytic rigid-disk series oracle: limits, symmetry, frozen fixture."""

import json
from pathlib import Path

import numpy as np
import pytest
import scipy.special as sp

from echomap.analytic import disk_pressure

FIXTURE = Path(__file__).parent / "fixtures" / "cylinder_ring_ka3p4.json"


def _incident(source, k, points):
    r = np.linalg.norm(points - np.asarray(source)[None, :], axis=1)
    return 0.25j * sp.hankel1(0, k * r)


def test_vanishing_scatterer_recovers_incident():
    k = 6.0
    source = np.array([5.0, 0.0])
    th = np.linspace(0, 2 * np.pi, 17)[:-1]
    pts = 1.3 * np.stack([np.cos(th), np.sin(th)], axis=1)
    total = disk_pressure(1e-4, source, k, pts)
    inc = _incident(source, k, pts)
    assert np.max(np.abs(total - inc) / np.abs(inc)) < 1e-6


def test_rotational_covariance():
    a, k = 0.5, 7.0
    source = np.array([5.0, 0.0])
    pts = np.array([[1.2, 0.4], [-0.9, 0.8], [0.0, -1.5]])
    base = disk_pressure(a, source, k, pts)
    alpha = 0.77
    c, s = np.cos(alpha), np.sin(alpha)
    rot = np.array([[c, -s], [s, c]])
    rotated = disk_pressure(a, source @ rot.T, k, pts @ rot.T)
    assert np.max(np.abs(rotated - base) / np.abs(base)) < 1e-10


def test_mirror_symmetry():
    # geometry symmetric about the x-axis when the source sits on it
    a, k = 0.5, 9.1
    source = np.array([5.0, 0.0])
    pts = np.array([[0.8, 0.9], [-1.1, 0.3], [0.2, 1.4]])
    mirrored = pts * np.array([1.0, -1.0])
    p = disk_pressure(a, source, k, pts)
    q = disk_pressure(a, source, k, mirrored)
    assert np.max(np.abs(p - q) / np.abs(p)) < 1e-10


def test_reciprocity_of_series():
    a, k = 0.5, 6.8
    x = np.array([2.0, 0.7])
    y = np.array([-1.4, 1.9])
    pab = disk_pressure(a, y, k, x[None, :])[0]
    pba = disk_pressure(a, x, k, y[None, :])[0]
    assert abs(pab - pba) / abs(pab) < 1e-10


def test_rigid_boundary_condition():
    # radial derivative of the total field vanishes on the disk: one-sided
    # finite difference just outside the boundary
    a, k = 0.5, 6.8
    source = np.array([5.0, 0.0])
    th = np.array([0.1, 1.3, 2.9, 4.0])
    dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    h = 1e-5
    radii = np.array([a, a + h, a + 2 * h, a + 3 * h])
    vals = np.stack([disk_pressure(a, source, k, r * dirs) for r in radii])
    # third-order one-sided first-derivative stencil
    dpdr = (-11 * vals[0] + 18 * vals[1] - 9 * vals[2] + 2 * vals[3]) / (6 * h)
    scale = k * np.abs(vals[0])
    assert np.max(np.abs(dpdr) / scale) < 1e-3


def test_inputs_validated():
    with pytest.raises(ValueError):
        disk_pressure(0.5, np.array([0.2, 0.0]), 5.0, np.array([[1.0, 1.0]]))
    with pytest.raises(ValueError):
        disk_pressure(0.5, np.array([5.0, 0.0]), 5.0, np.array([[0.1, 0.1]]))
    with pytest.raises(ValueError):
        disk_pressure(0.5, np.array([5.0, 0.0]), 5.0, np.array([[5.0, 0.0]]))


def test_frozen_ring_fixture():
    """Values frozen at fixture-generation time guard against regressions."""
    fix = json.loads(FIXTURE.read_text())
    th = 2 * np.pi * np.arange(fix["n_points"]) / fix["n_points"]
    pts = fix["ring_radius"] * np.stack([np.cos(th), np.sin(th)], axis=1)
    got = disk_pressure(fix["radius"], np.array(fix["source"]),
                        fix["wavenumber"], pts)
    want = np.array(fix["real"]) + 1j * np.array(fix["imag"])
    assert np.max(np.abs(got - want)) < 1e-12
