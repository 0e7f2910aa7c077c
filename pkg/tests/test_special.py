"""In-package Bessel/Hankel evaluation against scipy references."""

import numpy as np
import pytest
import scipy.special as sp

from echomap import special


@pytest.fixture(scope="module")
def zgrid():
    # dense log-spaced arguments plus random jitter across the working range
    rng = np.random.default_rng(42)
    z = np.geomspace(1e-5, 650.0, 20_000)
    z = z * np.exp(rng.uniform(-0.01, 0.01, z.size))
    return np.clip(z, 1e-5, 650.0)


def test_j0_j1_absolute_error(zgrid):
    assert np.max(np.abs(special.j0(zgrid) - sp.j0(zgrid))) < 5e-8
    assert np.max(np.abs(special.j1(zgrid) - sp.j1(zgrid))) < 5e-8


def test_y0_y1_error(zgrid):
    # absolute error away from the origin; near 0 the functions blow up so
    # compare relatively there
    for mine, ref in ((special.y0, sp.y0), (special.y1, sp.y1)):
        got = mine(zgrid)
        want = ref(zgrid)
        err = np.abs(got - want) / np.maximum(1.0, np.abs(want))
        assert np.max(err) < 5e-8


def test_h0_h1_consistency(zgrid):
    h0 = special.h0(zgrid)
    assert np.allclose(h0.real, special.j0(zgrid), rtol=0, atol=0)
    assert np.allclose(h0.imag, special.y0(zgrid), rtol=0, atol=0)
    ref = sp.hankel1(0, zgrid)
    rel = np.abs(h0 - ref) / np.abs(ref)
    assert np.max(rel) < 1e-7
    rel1 = np.abs(special.h1(zgrid) - sp.hankel1(1, zgrid)) \
        / np.abs(sp.hankel1(1, zgrid))
    assert np.max(rel1) < 1e-7


def test_hankel_modulus_identity():
    # |H0(x)| = sqrt(J0^2 + Y0^2) by definition of the Hankel function
    x = np.linspace(0.3, 60.0, 500)
    mod = np.abs(special.h0(x))
    assert np.allclose(mod, np.hypot(sp.j0(x), sp.y0(x)), rtol=1e-7)


def test_table_interpolation_accuracy(table):
    rng = np.random.default_rng(7)
    z = np.exp(rng.uniform(np.log(1e-5), np.log(650.0), 200_000))
    got0, got1 = table.h0(z), table.h1(z)
    ref0, ref1 = sp.hankel1(0, z), sp.hankel1(1, z)
    rel0 = np.abs(got0 - ref0) / np.abs(ref0)
    rel1 = np.abs(got1 - ref1) / np.abs(ref1)
    assert np.max(rel0) < 5e-7
    assert np.max(rel1) < 5e-7


def test_table_rejects_out_of_range(table):
    with pytest.raises(ValueError):
        table.h0(np.array([5e-6]))
    with pytest.raises(ValueError):
        table.h0(np.array([700.0]))


def test_table_is_process_singleton():
    assert special.default_table() is special.default_table()


def test_hankel_sequence_against_scipy():
    for x in (0.7, 3.3, 12.9, 47.0):
        hs = special.hankel_sequence(30, x)
        ref = sp.hankel1(np.arange(31), x)
        rel = np.abs(hs - ref) / np.abs(ref)
        assert np.max(rel) < 1e-6, x


def test_hankel_sequence_wronskian():
    # J_m(x) Y_{m+1}(x) - J_{m+1}(x) Y_m(x) = -2/(pi x)
    x = 5.6
    hs = special.hankel_sequence(6, x)
    j, y = hs.real, hs.imag
    for m in range(6):
        w = j[m] * y[m + 1] - j[m + 1] * y[m]
        assert w == pytest.approx(-2.0 / (np.pi * x), rel=1e-7)


def test_euler_gamma_constant():
    assert special.EULER_GAMMA == pytest.approx(float(np.euler_gamma),
                                                abs=1e-15)
