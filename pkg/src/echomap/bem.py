"""Boundary-element solver for sound-hard scatterers in two dimensions.

Given a convex polygonal scatterer and a monopole line source, the total
pressure p satisfies the Helmholtz equation outside the body, a zero
normal-derivative condition on the boundary, and outgoing behaviour at
infinity. The exterior field is represented through the boundary trace of
the total pressure,

    p(x) = p_inc(x) + integral over the boundary of dG(x,y)/dn_y p(y) ds_y,

which leads to a hypersingular integral equation for the trace. The
equation is discretized with continuous piecewise-linear elements and a
symmetric Galerkin scheme in the integrated-by-parts form, so the system
matrix is complex symmetric. Source/receiver exchange symmetry of the
computed field then holds by construction, because the right-hand side and
the evaluation functionals are the same vectors.

Fictitious interior resonances of this representation are suppressed by a
set of auxiliary outgoing circular-harmonic fields about an interior point:
their interior null-field moment identities are appended as extra symmetric
rows/columns and eliminated, giving the reduced system

    (T - F diag(lam) F^T) mu = -g(b) + F diag(lam) f(b),

still complex symmetric, whose solution carries a small radiating
correction on top of the boundary term.
"""

from __future__ import annotations

import dataclasses
import logging

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from . import special
from .shapes import ConvexPolygon

logger = logging.getLogger(__name__)

# Exact integrals of ln|u - v| over the unit square against the linear
# shape functions l0 = 1-u, l1 = u (values from symbolic integration).
_LN_CONST = -1.5
_LN_AB = np.array([[-7.0 / 16.0, -5.0 / 16.0],
                   [-5.0 / 16.0, -7.0 / 16.0]])

_NEAR_FACTOR = 2.2          # midpoint distance threshold in units of max length
_SUBDIV = (0.0, 0.06, 0.2, 0.5, 1.0)   # geometric refinement toward a corner
_H_COLUMN_CAP = 10.0        # drop auxiliary orders whose boundary values exceed this
_RCOND_FAIL = 1.0e-13

_EULER_GAMMA = special.EULER_GAMMA


class SolverError(RuntimeError):
    """Raised when the boundary system is numerically unusable."""


def _unit_gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


_G4_T, _G4_W = _unit_gauss(4)
_G8_T, _G8_W = _unit_gauss(8)


class BoundaryMesh:
    """Closed piecewise-linear boundary with per-segment geometry.

    Nodes are segment start points in positive orientation; segment i runs
    from node i to node i+1 (mod N). Outward normals assume the curve
    encloses the scatterer counter-clockwise.
    """

    def __init__(self, nodes: np.ndarray, k_max: float, elements_per_wavelength: float):
        nodes = np.asarray(nodes, dtype=np.float64)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or nodes.shape[0] < 3:
            raise ValueError("mesh needs at least three nodes of shape (N, 2)")
        self.nodes = nodes
        self.k_max = float(k_max)
        self.elements_per_wavelength = float(elements_per_wavelength)
        self.n_segments = nodes.shape[0]
        ends = np.roll(nodes, -1, axis=0)
        vec = ends - nodes
        self.lengths = np.linalg.norm(vec, axis=1)
        if np.any(self.lengths <= 0.0):
            raise ValueError("degenerate boundary segment")
        self.tangents = vec / self.lengths[:, None]
        self.normals = np.stack([self.tangents[:, 1], -self.tangents[:, 0]], axis=1)
        self.midpoints = 0.5 * (nodes + ends)
        self._vec = vec
        # interior expansion point and radius statistics for the auxiliary basis
        cross = nodes[:, 0] * ends[:, 1] - ends[:, 0] * nodes[:, 1]
        area2 = cross.sum()
        if area2 <= 0.0:
            raise ValueError("boundary must be counter-clockwise")
        self.area = 0.5 * area2
        self.center = ((nodes + ends) * cross[:, None]).sum(axis=0) / (3.0 * area2)
        rho_nodes = np.linalg.norm(nodes - self.center, axis=1)
        rho_mid = np.linalg.norm(self.midpoints - self.center, axis=1)
        self.rho_max = float(max(rho_nodes.max(), rho_mid.max()))
        self.rho_min = float(min(rho_nodes.min(), rho_mid.min()))

    def gauss(self, t: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature points (N, g, 2) and weights (N, g) on every segment."""
        pts = self.nodes[:, None, :] + t[None, :, None] * self._vec[:, None, :]
        wts = w[None, :] * self.lengths[:, None]
        return pts, wts


def build_mesh(polygon: ConvexPolygon, k_max: float,
               elements_per_wavelength: float) -> BoundaryMesh:
    """Subdivide polygon edges so segments stay under the target fraction
    of the shortest simulated wavelength."""
    h_max = (2.0 * np.pi / k_max) / elements_per_wavelength
    pieces = []
    verts = polygon.vertices
    n = verts.shape[0]
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        m = max(1, int(np.ceil(np.linalg.norm(b - a) / h_max)))
        frac = np.arange(m, dtype=np.float64) / m
        pieces.append(a[None, :] + frac[:, None] * (b - a)[None, :])
    return BoundaryMesh(np.concatenate(pieces, axis=0), k_max, elements_per_wavelength)


def circle_mesh(radius: float, k_max: float, elements_per_wavelength: float,
                center: tuple[float, float] = (0.0, 0.0)) -> BoundaryMesh:
    """Regular polygon calibrated to enclose the same area as the disk.

    Used by reference checks against the separable disk solution; the
    area-matched nodal radius removes the leading geometric bias of the
    inscribed polygon.
    """
    h_max = (2.0 * np.pi / k_max) / elements_per_wavelength
    n = max(12, int(np.ceil(2.0 * np.pi * radius / h_max)))
    nodal = radius * np.sqrt(2.0 * np.pi / (n * np.sin(2.0 * np.pi / n)))
    ang = 2.0 * np.pi * np.arange(n) / n
    nodes = np.stack([nodal * np.cos(ang), nodal * np.sin(ang)], axis=1)
    nodes += np.asarray(center, dtype=np.float64)[None, :]
    return BoundaryMesh(nodes, k_max, elements_per_wavelength)


def _self_integrals(length: float, k: float) -> tuple[np.ndarray, np.ndarray]:
    """Same-segment entries: log kernel integrated exactly, remainder by
    tensor quadrature. Returns (I0, Iab[2,2])."""
    s = _G8_T * length
    r = np.abs(s[:, None] - s[None, :])
    diag = r < 1e-14 * length
    r_safe = np.where(diag, 1.0, r)
    smooth = 0.25j * special.h0(k * r_safe) + np.log(r_safe) / (2.0 * np.pi)
    smooth0 = 0.25j - (np.log(0.5 * k) + _EULER_GAMMA) / (2.0 * np.pi)
    smooth = np.where(diag, smooth0, smooth)
    wl = _G8_W * length
    lfun = (1.0 - _G8_T, _G8_T)
    log_l = np.log(length)
    L2 = length * length
    I0 = -(L2 * (log_l + _LN_CONST)) / (2.0 * np.pi) \
        + np.einsum("i,j,ij->", wl, wl, smooth)
    Iab = np.empty((2, 2), dtype=np.complex128)
    for a in range(2):
        for b in range(2):
            Iab[a, b] = -(L2 * (0.25 * log_l + _LN_AB[a, b])) / (2.0 * np.pi) \
                + np.einsum("i,j,ij->", wl * lfun[a], wl * lfun[b], smooth)
    return I0, Iab


def _refined_rule(toward_start: bool) -> tuple[np.ndarray, np.ndarray]:
    """16-point composite rule on [0, 1], geometrically packed toward one end."""
    ts = []
    ws = []
    edges = np.asarray(_SUBDIV)
    if not toward_start:
        edges = 1.0 - edges[::-1]
    for lo, hi in zip(edges[:-1], edges[1:]):
        ts.append(lo + (hi - lo) * _G4_T)
        ws.append((hi - lo) * _G4_W)
    return np.concatenate(ts), np.concatenate(ws)


_RULE_TOWARD = {True: _refined_rule(True), False: _refined_rule(False)}


def _near_integrals(mesh: BoundaryMesh, p: int, q: int, k: float
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Adjacent or close segment pair, refined toward the closest ends."""
    npts = np.stack([mesh.nodes[p], mesh.nodes[(p + 1) % mesh.n_segments]])
    qpts = np.stack([mesh.nodes[q], mesh.nodes[(q + 1) % mesh.n_segments]])
    d = np.linalg.norm(npts[:, None, :] - qpts[None, :, :], axis=-1)
    ip, iq = np.unravel_index(np.argmin(d), d.shape)
    tp, wp = _RULE_TOWARD[ip == 0]
    tq, wq = _RULE_TOWARD[iq == 0]
    xp = mesh.nodes[p][None, :] + tp[:, None] * mesh._vec[p][None, :]
    xq = mesh.nodes[q][None, :] + tq[:, None] * mesh._vec[q][None, :]
    r = np.linalg.norm(xp[:, None, :] - xq[None, :, :], axis=-1)
    G = 0.25j * special.h0(k * r)
    wpl = wp * mesh.lengths[p]
    wql = wq * mesh.lengths[q]
    I0 = np.einsum("i,j,ij->", wpl, wql, G)
    lp = (1.0 - tp, tp)
    lq = (1.0 - tq, tq)
    Iab = np.empty((2, 2), dtype=np.complex128)
    for a in range(2):
        for b in range(2):
            Iab[a, b] = np.einsum("i,j,ij->", wpl * lp[a], wql * lq[b], G)
    return I0, Iab


def assemble_operator(mesh: BoundaryMesh, k: float,
                      table: special.HankelTable | None = None) -> np.ndarray:
    """Galerkin matrix of the integrated-by-parts hypersingular operator."""
    if table is None:
        table = special.default_table()
    n = mesh.n_segments
    X, W = mesh.gauss(_G4_T, _G4_W)
    flat = X.reshape(-1, 2)
    r = np.linalg.norm(flat[:, None, :] - flat[None, :, :], axis=-1)
    z = np.maximum(k * r, table.z_min)   # clamped entries are overwritten below
    G = (0.25j * table.h0(z)).reshape(n, 4, n, 4)

    W0 = W * (1.0 - _G4_T)[None, :]
    W1 = W * _G4_T[None, :]
    I0 = np.einsum("pa,qb,paqb->pq", W, W, G)
    Iab = np.empty((2, 2, n, n), dtype=np.complex128)
    Wl = (W0, W1)
    for a in range(2):
        for b in range(2):
            Iab[a, b] = np.einsum("pa,qb,paqb->pq", Wl[a], Wl[b], G)

    # pairs too close for the smooth rule
    dmid = np.linalg.norm(mesh.midpoints[:, None, :] - mesh.midpoints[None, :, :],
                          axis=-1)
    lmax = np.maximum(mesh.lengths[:, None], mesh.lengths[None, :])
    near = dmid < _NEAR_FACTOR * lmax
    for p in range(n):
        I0[p, p], Iab[:, :, p, p] = _self_integrals(mesh.lengths[p], k)
        for q in range(p + 1, n):
            if not near[p, q]:
                continue
            v0, vab = _near_integrals(mesh, p, q, k)
            I0[p, q] = I0[q, p] = v0
            Iab[:, :, p, q] = vab
            Iab[:, :, q, p] = vab.T

    sidx = np.arange(n)
    eidx = np.roll(sidx, -1)
    nodeidx = (sidx, eidx)
    sign = (-1.0, 1.0)
    inv_l = 1.0 / mesh.lengths
    nn = mesh.normals @ mesh.normals.T
    A = np.zeros((n, n), dtype=np.complex128)
    B = np.zeros((n, n), dtype=np.complex128)
    slope = I0 * np.outer(inv_l, inv_l)
    for a in range(2):
        for b in range(2):
            A[np.ix_(nodeidx[a], nodeidx[b])] += (sign[a] * sign[b]) * slope
            B[np.ix_(nodeidx[a], nodeidx[b])] += nn * Iab[a, b]
    T = (k * k) * B - A
    return 0.5 * (T + T.T)


def radiation_vectors(mesh: BoundaryMesh, k: float, points: np.ndarray,
                      table: special.HankelTable | None = None,
                      chunk: int = 1024) -> np.ndarray:
    """Boundary-to-point coupling vectors, shape (npts, n_nodes).

    Row x holds the integrals of each nodal hat function against
    dG(y, x)/dn_y. The same vectors serve as right-hand sides (x a source)
    and as field evaluation functionals (x a receiver), which is what makes
    the computed fields exactly symmetric under source/receiver exchange.
    """
    if table is None:
        table = special.default_table()
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = mesh.n_segments
    X, W = mesh.gauss(_G4_T, _G4_W)
    W0 = W * (1.0 - _G4_T)[None, :]
    W1 = W * _G4_T[None, :]
    sidx = np.arange(n)
    eidx = np.roll(sidx, -1)
    out = np.empty((points.shape[0], n), dtype=np.complex128)
    for lo in range(0, points.shape[0], chunk):
        pts = points[lo:lo + chunk]
        d = X[None, :, :, :] - pts[:, None, None, :]
        r = np.linalg.norm(d, axis=-1)
        ndotd = (d * mesh.normals[None, :, None, :]).sum(-1)
        kern = (-0.25j * k) * table.h1(k * r) * (ndotd / r)
        block = np.zeros((pts.shape[0], n), dtype=np.complex128)
        block[:, sidx] += np.einsum("pa,cpa->cp", W0, kern)
        block[:, eidx] += np.einsum("pa,cpa->cp", W1, kern)
        out[lo:lo + chunk] = block
    return out


def incident_pressure(sources: np.ndarray, k: float, points: np.ndarray,
                      table: special.HankelTable | None = None) -> np.ndarray:
    """Free monopole field, shape (npts, nsrc)."""
    if table is None:
        table = special.default_table()
    sources = np.asarray(sources, dtype=np.float64).reshape(-1, 2)
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    r = np.linalg.norm(points[:, None, :] - sources[None, :, :], axis=-1)
    if np.any(r <= 0.0):
        raise ValueError("evaluation point coincides with a source")
    return 0.25j * table.h0(k * r)


def _auxiliary_orders(mesh: BoundaryMesh, k: float) -> int:
    """Highest circular-harmonic order kept in the resonance guard.

    Orders past the angular bandwidth of trapped interior modes add nothing,
    and their boundary values grow factorially once m exceeds k*rho, which
    would poison the system scale; both limits are applied.
    """
    target = int(np.ceil(k * mesh.rho_max)) + 8
    seq = np.abs(special.hankel_sequence(target, np.array([k * mesh.rho_min])))
    safe = np.nonzero(seq[:, 0] > _H_COLUMN_CAP)[0]
    if safe.size:
        target = min(target, max(1, int(safe[0]) - 1))
    return target


def _basis_orders(max_order: int) -> list[tuple[int, int]]:
    """(m, parity) pairs; parity 0 = cos, 1 = sin. Order zero has no sine."""
    orders = [(0, 0)]
    for m in range(1, max_order + 1):
        orders.append((m, 0))
        orders.append((m, 1))
    return orders


def _aux_couplings(orders: list[tuple[int, int]]) -> np.ndarray:
    """Diagonal weights lam_m = (i/4) eps_m of the auxiliary block."""
    eps = np.array([1.0 if m == 0 else 2.0 for m, _ in orders])
    return 0.25j * eps


def multipole_matrix(mesh: BoundaryMesh, k: float,
                     orders: list[tuple[int, int]]) -> np.ndarray:
    """Moments F[i, col] of the hat functions against the normal derivative
    of each auxiliary outgoing harmonic about the interior center."""
    max_order = max(m for m, _ in orders)
    X, W = mesh.gauss(_G8_T, _G8_W)
    d = X - mesh.center[None, None, :]
    rho = np.linalg.norm(d, axis=-1)
    theta = np.arctan2(d[..., 1], d[..., 0])
    H = special.hankel_sequence(max_order + 1, k * rho)
    n_er = (mesh.normals[:, None, :] * d).sum(-1) / rho
    n_et = (mesh.normals[:, None, 0] * (-d[..., 1])
            + mesh.normals[:, None, 1] * d[..., 0]) / (rho * rho)
    W0 = W * (1.0 - _G8_T)[None, :]
    W1 = W * _G8_T[None, :]
    n = mesh.n_segments
    sidx = np.arange(n)
    eidx = np.roll(sidx, -1)
    F = np.zeros((n, len(orders)), dtype=np.complex128)
    for col, (m, parity) in enumerate(orders):
        dH = (H[m - 1] - (m / (k * rho)) * H[m]) if m else -H[1]
        mt = m * theta
        if parity == 0:
            dfdn = k * dH * n_er * np.cos(mt) - m * H[m] * np.sin(mt) * n_et
        else:
            dfdn = k * dH * n_er * np.sin(mt) + m * H[m] * np.cos(mt) * n_et
        F[sidx, col] += (W0 * dfdn).sum(axis=1)
        F[eidx, col] += (W1 * dfdn).sum(axis=1)
    return F


def multipole_values(points: np.ndarray, center: np.ndarray, k: float,
                     orders: list[tuple[int, int]]) -> np.ndarray:
    """Auxiliary harmonics evaluated at field points, shape (npts, ncols)."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    d = points - np.asarray(center)[None, :]
    rho = np.linalg.norm(d, axis=-1)
    theta = np.arctan2(d[:, 1], d[:, 0])
    max_order = max(m for m, _ in orders)
    H = special.hankel_sequence(max_order, k * rho)
    out = np.empty((points.shape[0], len(orders)), dtype=np.complex128)
    for col, (m, parity) in enumerate(orders):
        trig = np.cos(m * theta) if parity == 0 else np.sin(m * theta)
        out[:, col] = H[m] * trig
    return out


@dataclasses.dataclass
class SurfaceSolution:
    """Boundary trace and auxiliary amplitudes for one source at one k."""

    k: float
    source: np.ndarray
    node_pressure: np.ndarray      # complex, one per mesh node
    aux_amplitude: np.ndarray      # lam * alpha, ready for evaluation
    orders: list[tuple[int, int]]
    center: np.ndarray
    rcond: float

    @property
    def midpoint_pressure(self) -> np.ndarray:
        mu = self.node_pressure
        return 0.5 * (mu + np.roll(mu, -1))


def solve_sources(mesh: BoundaryMesh, k: float, sources: np.ndarray,
                  table: special.HankelTable | None = None) -> list[SurfaceSolution]:
    """Solve the boundary system once and back out every source's trace."""
    if table is None:
        table = special.default_table()
    sources = np.asarray(sources, dtype=np.float64).reshape(-1, 2)
    T = assemble_operator(mesh, k, table)
    orders = _basis_orders(_auxiliary_orders(mesh, k))
    lam = _aux_couplings(orders)
    F = multipole_matrix(mesh, k, orders)
    B = T - (F * lam[None, :]) @ F.T
    B = 0.5 * (B + B.T)

    anorm = np.abs(B).sum(axis=0).max()
    lu, piv, info = lapack.zgetrf(B)
    if info != 0:
        raise SolverError(f"boundary system factorization failed (info={info})")
    rcond, info = lapack.zgecon(lu, anorm)
    if info != 0 or not np.isfinite(rcond) or rcond < _RCOND_FAIL:
        raise SolverError(
            f"boundary system near-singular (rcond={rcond:.3e}, k={k:.4f})")

    g_src = radiation_vectors(mesh, k, sources, table)       # (ns, N)
    f_src = multipole_values(sources, mesh.center, k, orders)  # (ns, nb)
    rhs = -g_src.T + F @ (lam[:, None] * f_src.T)             # (N, ns)
    mu, info = lapack.zgetrs(lu, piv, rhs)
    if info != 0 or not np.all(np.isfinite(mu)):
        raise SolverError("boundary solve produced non-finite trace")
    alpha = -f_src.T - F.T @ mu                               # (nb, ns)
    aux = lam[:, None] * alpha
    logger.debug("solve k=%.4f nodes=%d aux_orders=%d rcond=%.2e",
                 k, mesh.n_segments, len(orders), rcond)
    return [
        SurfaceSolution(k=k, source=sources[j].copy(),
                        node_pressure=mu[:, j].copy(),
                        aux_amplitude=aux[:, j].copy(),
                        orders=orders, center=mesh.center.copy(),
                        rcond=float(rcond))
        for j in range(sources.shape[0])
    ]


def points_inside(mesh: BoundaryMesh, points: np.ndarray) -> np.ndarray:
    """True where a point lies inside or on the closed boundary curve.

    Subdivision nodes are collinear with the parent edge, so the signed
    distance test against mesh segments matches the test against the
    original convex polygon. Points within a hair of the boundary count as
    inside, so exact boundary points classify stably despite rounding.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    a = mesh.nodes
    t = np.roll(a, -1, axis=0) - a
    inv_l = 1.0 / mesh.lengths
    tol = -1e-9 * mesh.rho_max
    out = np.empty(pts.shape[0], dtype=bool)
    step = max(1, (1 << 22) // max(a.shape[0], 1))
    for lo in range(0, pts.shape[0], step):
        chunk = pts[lo:lo + step]
        rel_x = chunk[:, None, 0] - a[None, :, 0]
        rel_y = chunk[:, None, 1] - a[None, :, 1]
        dist = (t[None, :, 0] * rel_y - t[None, :, 1] * rel_x) * inv_l[None, :]
        out[lo:lo + step] = dist.min(axis=1) >= tol
    return out


def scattered_pressure(mesh: BoundaryMesh, solutions: list[SurfaceSolution],
                       points: np.ndarray,
                       table: special.HankelTable | None = None) -> np.ndarray:
    """Scattered part of the field for each solution, shape (npts, nsol).

    Points must lie strictly outside the scatterer; the representation is
    not valid inside or on the boundary.
    """
    if table is None:
        table = special.default_table()
    if not solutions:
        raise ValueError("no solutions given")
    if points_inside(mesh, points).any():
        raise ValueError("evaluation points must lie outside the scatterer")
    k = solutions[0].k
    E = radiation_vectors(mesh, k, points, table)
    Fv = multipole_values(points, solutions[0].center, k, solutions[0].orders)
    mu = np.stack([s.node_pressure for s in solutions], axis=1)
    aux = np.stack([s.aux_amplitude for s in solutions], axis=1)
    return E @ mu + Fv @ aux


def total_pressure(mesh: BoundaryMesh | None, solutions: list[SurfaceSolution],
                   k: float, sources: np.ndarray, points: np.ndarray,
                   table: special.HankelTable | None = None) -> np.ndarray:
    """Incident plus scattered field; mesh None means free propagation."""
    p = incident_pressure(sources, k, points, table)
    if mesh is not None:
        p = p + scattered_pressure(mesh, solutions, points, table)
    return p
