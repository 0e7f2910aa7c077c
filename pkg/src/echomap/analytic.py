"""Closed-form reference field for a sound-hard circular scatterer.

Separation of variables gives the exact exterior field of a monopole line
source outside a rigid disk as a circular-harmonic series. This module is
the reference route used to validate the boundary-element solver, so it
deliberately evaluates everything with scipy.special rather than the fast
kernels used in production.
"""

from __future__ import annotations

import numpy as np
import scipy.special as sp

_REL_TOL = 1e-12
_EXTRA_ORDERS = 250


def disk_pressure(radius: float, source: np.ndarray, k: float,
                  points: np.ndarray) -> np.ndarray:
    """Total pressure outside a rigid disk centered at the origin.

    Parameters
    ----------
    radius : disk radius.
    source : (2,) monopole position, strictly outside the disk.
    k : wavenumber.
    points : (n, 2) evaluation points, outside or on the disk boundary
        (the series converges on the boundary itself, where it gives the
        surface trace).

    Returns
    -------
    (n,) complex pressures. The series is truncated adaptively once terms
    stop contributing at relative level 1e-12.
    """
    source = np.asarray(source, dtype=np.float64).reshape(2)
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    rho_s = np.hypot(source[0], source[1])
    th_s = np.arctan2(source[1], source[0])
    rho = np.hypot(points[:, 0], points[:, 1])
    th = np.arctan2(points[:, 1], points[:, 0])
    if rho_s <= radius or np.any(rho < radius * (1.0 - 1e-12)):
        raise ValueError("source and evaluation points must lie outside the disk")

    r = np.linalg.norm(points - source[None, :], axis=1)
    if np.any(r == 0.0):
        raise ValueError("evaluation point coincides with the source")
    total = 0.25j * sp.hankel1(0, k * r)

    dth = th - th_s
    m = 0
    quiet = 0
    while True:
        eps = 1.0 if m == 0 else 2.0
        cm = -sp.jvp(m, k * radius) / sp.h1vp(m, k * radius)
        term = (0.25j * eps * cm) * sp.hankel1(m, k * rho) \
            * sp.hankel1(m, k * rho_s) * np.cos(m * dth)
        total = total + term
        scale = np.abs(total).max()
        if scale > 0.0 and np.abs(term).max() < _REL_TOL * scale:
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
        m += 1
        if m > k * max(rho.max(), rho_s) + _EXTRA_ORDERS:
            break
    return total
