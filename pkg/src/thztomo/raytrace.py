"""Refracted ray paths through a set of known interfaces, and exact
pixel-traversal lengths for one ray (a sparse system-matrix row).

A ray is parametrized as ``Gamma(t) = s * omega(phi) + t * omega_perp(phi)``
with ``omega = (cos phi, sin phi)`` and ``omega_perp = (-sin phi, cos phi)``,
so ``omega_perp`` is the direction of travel and s the signed offset of the
line from the origin.  Each interface crossing starts a new partial ray with
its own (phi, s, t) frame; partials share the crossing point exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .geometry import InterfaceSet, nearest_hit
from .optics import RefractionEvent, fresnel_reflectance, probe_two_sided, snell

__all__ = ["GrazingIncidenceError", "PartialRay", "CrossingEvent", "RayPath",
           "SparseRow", "refract_direction", "next_offset", "trace",
           "traverse_pixels", "dump_path_csv"]

TWO_PI = 2.0 * math.pi
GRAZING_TOL = 1e-9
DEFAULT_CAP = 64
# probe offset as a fraction of the pixel side: must exceed 1/sqrt(2) so a
# probe point's enclosing pixel center is guaranteed to lie on the probe's
# side of a straight interface, yet stay below one pixel
PROBE_EPS_FACTOR = 0.75


class GrazingIncidenceError(ValueError):
    """Ray direction is tangent to the interface; refraction undefined."""


@dataclass(frozen=True)
class PartialRay:
    """One straight piece of a refracted ray, t in [t_start, t_end]."""

    phi: float
    s: float
    t_start: float
    t_end: float

    @property
    def omega(self) -> np.ndarray:
        return np.array([math.cos(self.phi), math.sin(self.phi)])

    @property
    def omega_perp(self) -> np.ndarray:
        return np.array([-math.sin(self.phi), math.cos(self.phi)])

    def point_at(self, t: float) -> np.ndarray:
        c, s_ = math.cos(self.phi), math.sin(self.phi)
        return np.array([self.s * c - t * s_, self.s * s_ + t * c])

    @property
    def start(self) -> np.ndarray:
        return self.point_at(self.t_start)

    @property
    def end(self) -> np.ndarray:
        return self.point_at(self.t_end)

    @property
    def length(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class CrossingEvent:
    """A refraction event annotated with where and how it happened."""

    refraction: RefractionEvent
    point: np.ndarray
    unit_normal: np.ndarray
    phi_before: float
    phi_after: float
    curve_index: int
    is_corner: bool


@dataclass(frozen=True)
class RayPath:
    """Full polyline path of one ray: K crossings yield K+1 partial rays
    (unless the refraction cap truncated the trace)."""

    partials: tuple[PartialRay, ...]
    events: tuple[CrossingEvent, ...]
    truncated: bool

    @property
    def n_crossings(self) -> int:
        return len(self.events)

    @property
    def c_abs(self) -> float:
        """Product of transmitted intensity fractions prod(1 - rho)."""
        c = 1.0
        for ev in self.events:
            c *= 1.0 - ev.refraction.rho
        return c

    @property
    def length(self) -> float:
        return sum(p.length for p in self.partials)

    def polyline(self) -> np.ndarray:
        """Vertex array (k+1, 2) of the path, one row per segment endpoint."""
        if not self.partials:
            return np.zeros((0, 2))
        pts = [self.partials[0].start]
        pts.extend(p.end for p in self.partials)
        return np.array(pts)


@dataclass(frozen=True)
class SparseRow:
    """One system-matrix row: per-pixel traversal lengths of a ray path."""

    indices: np.ndarray  # flat pixel indices, sorted, int32
    lengths: np.ndarray  # mm, same order
    c_abs: float
    valid: bool

    def dot(self, flat_field: np.ndarray) -> float:
        return float(np.dot(self.lengths, flat_field[self.indices]))

    @property
    def norm_sq(self) -> float:
        return float(np.dot(self.lengths, self.lengths))


def refract_direction(phi: float, gamma1: float, gamma2: float,
                      unit_normal, omega_perp) -> float:
    """New direction angle after a refraction, phi +- (gamma1 - gamma2).

    The sign follows the orientation of the normal relative to the incident
    direction: the turn is +(gamma1 - gamma2) when <u, n> and <u, n_perp>
    share a sign and -(gamma1 - gamma2) when they differ, with
    n_perp = (n_y, -n_x).  This is the unique assignment consistent with the
    vector form of Snell's law for either normal orientation (the property
    tests check exactly that).
    """
    ux, uy = float(omega_perp[0]), float(omega_perp[1])
    nx, ny = float(unit_normal[0]), float(unit_normal[1])
    d_n = ux * nx + uy * ny
    d_p = ux * ny - uy * nx  # <u, (n_y, -n_x)>
    if abs(d_n) < GRAZING_TOL and abs(d_p) < GRAZING_TOL:
        raise GrazingIncidenceError("ray tangent to interface")
    if (d_n < 0.0 and d_p <= 0.0) or (d_n > 0.0 and d_p >= 0.0):
        theta = gamma1 - gamma2
    else:
        theta = gamma2 - gamma1
    return (phi + theta) % TWO_PI


def next_offset(phi_next: float, interface_point) -> float:
    """Offset from the origin of the refracted line through the crossing point.

    Signed projection <omega(phi_next), point>; its magnitude is the distance
    of the new line from the origin, the sign is fixed so that the line
    ``s*omega + t*omega_perp`` actually contains the crossing point.
    """
    return (math.cos(phi_next) * float(interface_point[0])
            + math.sin(phi_next) * float(interface_point[1]))


def trace(iset: InterfaceSet, fld, phi: float, s: float,
          cap: int = DEFAULT_CAP, eps: float | None = None) -> RayPath:
    """Trace one ray through the interface set, refracting on the index field.

    The path starts at the entry of the reconstruction disk and ends at its
    exit, or after ``cap`` refraction events (then ``truncated`` is set).
    Grazing incidences (direction within 1e-9 of tangent) produce no event
    and the ray continues straight.
    """
    if cap < 1:
        raise ValueError("refraction cap must be >= 1")
    if eps is None:
        eps = PROBE_EPS_FACTOR * fld.grid.h
    R = iset.R
    if s * s >= R * R:
        # tangent or outside: degenerate zero-length path
        return RayPath((PartialRay(phi, s, 0.0, 0.0),), (), False)

    partials: list[PartialRay] = []
    events: list[CrossingEvent] = []
    phi_l, s_l = phi, s
    t_start = -math.sqrt(R * R - s * s)
    t_search = t_start
    truncated = False

    while True:
        omega = np.array([math.cos(phi_l), math.sin(phi_l)])
        u = np.array([-omega[1], omega[0]])
        hit = nearest_hit(iset, s_l * omega, u, t_search)
        if hit is None:
            t_exit = math.sqrt(max(R * R - s_l * s_l, 0.0))
            partials.append(PartialRay(phi_l, s_l, t_start, t_exit))
            break
        d_n = float(u[0]) * float(hit.unit_normal[0]) + float(u[1]) * float(hit.unit_normal[1])
        if abs(d_n) < GRAZING_TOL:
            t_search = hit.t  # tangent graze: no event, keep going straight
            continue
        n1, n2 = probe_two_sided(fld, hit.point, hit.unit_normal, u, eps)
        gamma1 = math.acos(min(abs(d_n), 1.0))
        ev = snell(n1, n2, gamma1)
        partials.append(PartialRay(phi_l, s_l, t_start, hit.t))
        phi_next = refract_direction(phi_l, ev.gamma1, ev.gamma2, hit.unit_normal, u)
        events.append(CrossingEvent(ev, hit.point, hit.unit_normal,
                                    phi_l, phi_next, hit.curve_index, hit.is_corner))
        if len(events) >= cap:
            truncated = True
            break
        phi_l = phi_next
        s_l = next_offset(phi_l, hit.point)
        t_start = (-math.sin(phi_l) * float(hit.point[0])
                   + math.cos(phi_l) * float(hit.point[1]))
        t_search = t_start

    return RayPath(tuple(partials), tuple(events), truncated)


def _segment_cells(p0x: float, p0y: float, p1x: float, p1y: float,
                   grid) -> tuple[np.ndarray, np.ndarray]:
    """Exact per-pixel chord lengths of one straight segment.

    Splits [0, L] at every grid-line crossing and attributes each piece to
    the pixel containing its midpoint; zero-length pieces (corner ties) are
    attributed to no pixel.
    """
    dx = p1x - p0x
    dy = p1y - p0y
    L = math.hypot(dx, dy)
    if L <= 0.0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    ux, uy = dx / L, dy / L
    h = grid.h
    x0, y0 = grid.x0, grid.y0
    xmax = x0 + grid.cols * h
    ymax = y0 + grid.rows * h

    # clip [t_lo, t_hi] to the grid box (the path normally lies inside)
    t_lo, t_hi = 0.0, L
    for p, u, lo, hi in ((p0x, ux, x0, xmax), (p0y, uy, y0, ymax)):
        if u == 0.0:
            if not lo <= p <= hi:
                return np.empty(0, dtype=np.int64), np.empty(0)
            continue
        ta = (lo - p) / u
        tb = (hi - p) / u
        if ta > tb:
            ta, tb = tb, ta
        t_lo = max(t_lo, ta)
        t_hi = min(t_hi, tb)
    if t_hi <= t_lo:
        return np.empty(0, dtype=np.int64), np.empty(0)

    cuts = [np.array([t_lo, t_hi])]
    for p, u, orig in ((p0x, ux, x0), (p0y, uy, y0)):
        if u == 0.0:
            continue
        ca = (p + t_lo * u - orig) / h
        cb = (p + t_hi * u - orig) / h
        kmin = math.ceil(min(ca, cb) - 1e-12)
        kmax = math.floor(max(ca, cb) + 1e-12)
        if kmax >= kmin:
            ks = np.arange(kmin, kmax + 1, dtype=float)
            cuts.append((orig + ks * h - p) / u)
    ts = np.sort(np.concatenate(cuts))
    ts = ts[(ts >= t_lo) & (ts <= t_hi)]
    dt = np.diff(ts)
    keep = dt > 0.0
    if not np.any(keep):
        return np.empty(0, dtype=np.int64), np.empty(0)
    mid = 0.5 * (ts[:-1] + ts[1:])[keep]
    jj = np.clip(((p0x + mid * ux - x0) / h).astype(np.int64), 0, grid.cols - 1)
    ii = np.clip(((p0y + mid * uy - y0) / h).astype(np.int64), 0, grid.rows - 1)
    return ii * grid.cols + jj, dt[keep]


def traverse_pixels(path: RayPath, grid) -> SparseRow:
    """Sparse system-matrix row of the path on the grid: summed chord lengths
    per pixel over all partial rays, duplicates merged."""
    idx_parts = []
    len_parts = []
    for part in path.partials:
        x0, y0 = part.start
        x1, y1 = part.end
        idx, lng = _segment_cells(float(x0), float(y0), float(x1), float(y1), grid)
        if idx.size:
            idx_parts.append(idx)
            len_parts.append(lng)
    if not idx_parts:
        return SparseRow(np.empty(0, dtype=np.int32), np.empty(0),
                         path.c_abs, False)
    idx = np.concatenate(idx_parts)
    lng = np.concatenate(len_parts)
    order = np.argsort(idx, kind="stable")
    idx = idx[order]
    lng = lng[order]
    first = np.ones(idx.size, dtype=bool)
    first[1:] = idx[1:] != idx[:-1]
    starts = np.flatnonzero(first)
    merged = np.add.reduceat(lng, starts)
    return SparseRow(idx[starts].astype(np.int32), merged, path.c_abs,
                     not path.truncated)


def dump_path_csv(path: RayPath, file_or_path) -> None:
    """Debug dump: polyline vertices, then per-event (gamma1, gamma2, rho)."""
    own = isinstance(file_or_path, (str, bytes)) or hasattr(file_or_path, "__fspath__")
    fh = open(file_or_path, "w", newline="", encoding="utf-8") if own else file_or_path
    try:
        w = csv.writer(fh)
        w.writerow(["record", "x_mm", "y_mm", "gamma1_rad", "gamma2_rad", "rho"])
        for v in path.polyline():
            w.writerow(["vertex", repr(float(v[0])), repr(float(v[1])), "", "", ""])
        for ev in path.events:
            w.writerow(["event", repr(float(ev.point[0])), repr(float(ev.point[1])),
                        repr(ev.refraction.gamma1), repr(ev.refraction.gamma2),
                        repr(ev.refraction.rho)])
    finally:
        if own:
            fh.close()
