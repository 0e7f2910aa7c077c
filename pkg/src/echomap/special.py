"""Vectorized Bessel/Hankel evaluation for the scattering kernels.

Rational approximations (Abramowitz-Stegun style minimax fits, absolute
error ~1e-7) for J0, J1, Y0, Y1 on float64 arrays, combined into outgoing
Hankel functions H = J + iY. Orders above one come from the standard forward
recurrence, which is stable for the outgoing family (the Y part dominates
and grows). Reference-route code (analytic series, test oracles) must use
scipy.special instead so the two routes stay independent.
"""

from __future__ import annotations

import numpy as np

__all__ = ["j0", "j1", "y0", "y1", "h0", "h1", "hankel_sequence"]

_PI = np.pi
_TWO_OVER_PI = 2.0 / np.pi
EULER_GAMMA = 0.5772156649015329


def _poly(y: np.ndarray, coeffs) -> np.ndarray:
    acc = np.full_like(y, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * y + c
    return acc


def j0(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    small = ax < 8.0
    out = np.empty_like(ax)

    xs = np.where(small, ax, 0.0)
    y = xs * xs
    num = _poly(y, (57568490574.0, -13362590354.0, 651619640.7,
                    -11214424.18, 77392.33017, -184.9052456))
    den = _poly(y, (57568490411.0, 1029532985.0, 9494680.718,
                    59272.64853, 267.8532712, 1.0))
    out_small = num / den

    xl = np.where(small, 8.0, ax)
    z = 8.0 / xl
    y2 = z * z
    p0 = _poly(y2, (1.0, -0.1098628627e-2, 0.2734510407e-4,
                    -0.2073370639e-5, 0.2093887211e-6))
    q0 = _poly(y2, (-0.1562499995e-1, 0.1430488765e-3, -0.6911147651e-5,
                    0.7621095161e-6, -0.934935152e-7))
    xx = xl - 0.25 * _PI
    out_large = np.sqrt(_TWO_OVER_PI / xl) * (np.cos(xx) * p0 - z * np.sin(xx) * q0)

    np.copyto(out, np.where(small, out_small, out_large))
    return out


def j1(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    small = ax < 8.0
    out = np.empty_like(ax)

    xs = np.where(small, ax, 0.0)
    y = xs * xs
    num = xs * _poly(y, (72362614232.0, -7895059235.0, 242396853.1,
                         -2972611.439, 15704.48260, -30.16036606))
    den = _poly(y, (144725228442.0, 2300535178.0, 18583304.74,
                    99447.43394, 376.9991397, 1.0))
    out_small = num / den

    xl = np.where(small, 8.0, ax)
    z = 8.0 / xl
    y2 = z * z
    p1 = _poly(y2, (1.0, 0.183105e-2, -0.3516396496e-4,
                    0.2457520174e-5, -0.240337019e-6))
    q1 = _poly(y2, (0.04687499995, -0.2002690873e-3, 0.8449199096e-5,
                    -0.88228987e-6, 0.105787412e-6))
    xx = xl - 0.75 * _PI
    out_large = np.sqrt(_TWO_OVER_PI / xl) * (np.cos(xx) * p1 - z * np.sin(xx) * q1)

    np.copyto(out, np.where(small, out_small, out_large))
    return out * np.sign(x)


def y0(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0.0):
        raise ValueError("y0 requires positive arguments")
    small = x < 8.0
    out = np.empty_like(x)

    xs = np.where(small, x, 1.0)
    y = xs * xs
    num = _poly(y, (-2957821389.0, 7062834065.0, -512359803.6,
                    10879881.29, -86327.92757, 228.4622733))
    den = _poly(y, (40076544269.0, 745249964.8, 7189466.438,
                    47447.26470, 226.1030244, 1.0))
    out_small = num / den + _TWO_OVER_PI * j0(xs) * np.log(xs)

    xl = np.where(small, 8.0, x)
    z = 8.0 / xl
    y2 = z * z
    p0 = _poly(y2, (1.0, -0.1098628627e-2, 0.2734510407e-4,
                    -0.2073370639e-5, 0.2093887211e-6))
    q0 = _poly(y2, (-0.1562499995e-1, 0.1430488765e-3, -0.6911147651e-5,
                    0.7621095161e-6, -0.934935152e-7))
    xx = xl - 0.25 * _PI
    out_large = np.sqrt(_TWO_OVER_PI / xl) * (np.sin(xx) * p0 + z * np.cos(xx) * q0)

    np.copyto(out, np.where(small, out_small, out_large))
    return out


def y1(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0.0):
        raise ValueError("y1 requires positive arguments")
    small = x < 8.0
    out = np.empty_like(x)

    xs = np.where(small, x, 1.0)
    y = xs * xs
    num = xs * _poly(y, (-4.900604943e12, 1.275274390e12, -5.153438139e10,
                         7.349264551e8, -4.237922726e6, 8.511937935e3))
    den = _poly(y, (2.499580570e13, 4.244419664e11, 3.733650367e9,
                    2.245904002e7, 1.020426050e5, 3.549632885e2, 1.0))
    out_small = num / den + _TWO_OVER_PI * (j1(xs) * np.log(xs) - 1.0 / xs)

    xl = np.where(small, 8.0, x)
    z = 8.0 / xl
    y2 = z * z
    p1 = _poly(y2, (1.0, 0.183105e-2, -0.3516396496e-4,
                    0.2457520174e-5, -0.240337019e-6))
    q1 = _poly(y2, (0.04687499995, -0.2002690873e-3, 0.8449199096e-5,
                    -0.88228987e-6, 0.105787412e-6))
    xx = xl - 0.75 * _PI
    out_large = np.sqrt(_TWO_OVER_PI / xl) * (np.sin(xx) * p1 + z * np.cos(xx) * q1)

    np.copyto(out, np.where(small, out_small, out_large))
    return out


def h0(x: np.ndarray) -> np.ndarray:
    """Outgoing Hankel function of order zero on positive reals."""
    return j0(x) + 1j * y0(x)


def h1(x: np.ndarray) -> np.ndarray:
    """Outgoing Hankel function of order one on positive reals."""
    return j1(x) + 1j * y1(x)


class HankelTable:
    """Cubic-interpolation table for H0 and H1 on a log-spaced argument grid.

    The grid kernels evaluate outgoing Hankel functions at tens of millions
    of arguments per frequency; direct rational-approximation evaluation is
    the bottleneck. A table in u = ln(z) keeps the relative interpolation
    error uniform: for small z the functions are polynomial in u (H0) or
    exponential in u (H1), for large z each d/du pulls a factor z out of the
    oscillation, so du <= target_phase / z_max bounds the error everywhere.

    The table is a pure function of its construction parameters, so every
    process builds the identical table and lookups are bit-reproducible.
    """

    def __init__(self, z_min: float = 1e-5, z_max: float = 650.0,
                 phase_step: float = 0.04) -> None:
        if not (0.0 < z_min < z_max):
            raise ValueError("require 0 < z_min < z_max")
        self.z_min = float(z_min)
        self.z_max = float(z_max)
        self.u0 = np.log(self.z_min)
        u1 = np.log(self.z_max)
        du = phase_step / self.z_max
        n = int(np.ceil((u1 - self.u0) / du)) + 4
        self.du = (u1 - self.u0) / (n - 4)
        # two guard points on each side so cubic stencils never clip
        u = self.u0 + (np.arange(n) - 1) * self.du
        z = np.exp(u)
        self._h0 = h0(z)
        self._h1 = h1(z)
        self._n = n

    def _interp(self, table: np.ndarray, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.size and (z.min() < self.z_min or z.max() > self.z_max):
            raise ValueError(
                f"argument outside table range [{self.z_min}, {self.z_max}]")
        u = np.log(z)
        pos = (u - self.u0) / self.du
        idx = pos.astype(np.int64)
        np.clip(idx, 0, self._n - 4, out=idx)
        t = pos - idx
        # 4-point Lagrange weights on the stencil idx .. idx+3 (offset -1..2)
        tm = t - 1.0
        tp = t + 1.0
        t2 = t - 2.0
        w0 = -t * tm * t2 / 6.0
        w1 = tp * tm * t2 / 2.0
        w2 = -tp * t * t2 / 2.0
        w3 = tp * t * tm / 6.0
        return (w0 * table[idx] + w1 * table[idx + 1]
                + w2 * table[idx + 2] + w3 * table[idx + 3])

    def h0(self, z: np.ndarray) -> np.ndarray:
        return self._interp(self._h0, z)

    def h1(self, z: np.ndarray) -> np.ndarray:
        return self._interp(self._h1, z)


_DEFAULT_TABLE: HankelTable | None = None


def default_table() -> HankelTable:
    """Process-wide shared table covering every argument the solver needs."""
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = HankelTable()
    return _DEFAULT_TABLE


def hankel_sequence(max_order: int, x: np.ndarray) -> np.ndarray:
    """H_m(x) for m = 0..max_order, shape (max_order+1,) + x.shape.

    Forward recurrence H_{m+1} = (2m/x) H_m - H_{m-1}. Relative accuracy of
    the dominant (outgoing) part is preserved; callers must keep max_order
    within the overflow-safe range for their smallest argument.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0.0):
        raise ValueError("hankel_sequence requires positive arguments")
    out = np.empty((max_order + 1,) + x.shape, dtype=np.complex128)
    out[0] = h0(x)
    if max_order >= 1:
        out[1] = h1(x)
    for m in range(1, max_order):
        out[m + 1] = (2.0 * m / x) * out[m] - out[m - 1]
    return out
