"""A-priori interface geometry: line segments and circular arcs with normals,
shared-corner handling, and nearest ray-curve intersection queries.

Conventions used throughout:

* all lengths are in mm, all angles in radians;
* a curve's normal is the tangent rotated by +90 degrees (counter-clockwise),
  so its orientation is fixed by the parametrization direction.  No code may
  assume the normal points outward; sign handling is the caller's job;
* a ray is ``origin + t * direction`` with unit ``direction`` and t in mm.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeometryError",
    "Segment",
    "Arc",
    "Corner",
    "SurfaceHit",
    "InterfaceSet",
    "normal_at",
    "corner_normal",
    "nearest_hit",
    "distance_to_curve",
    "distance_to_set",
    "load_interfaces",
    "save_interfaces",
]

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Invalid geometric input (degenerate curve, parameter out of range, ...)."""


def _unit(v: np.ndarray) -> np.ndarray:
    nrm = math.hypot(float(v[0]), float(v[1]))
    if nrm == 0.0:
        raise GeometryError("zero vector cannot be normalized")
    return np.array([v[0] / nrm, v[1] / nrm])


@dataclass(frozen=True)
class Segment:
    """Straight interface piece from ``a`` to ``b``, parametrized on [0, 1]."""

    a: tuple[float, float]
    b: tuple[float, float]

    def __post_init__(self):
        if math.dist(self.a, self.b) == 0.0:
            raise GeometryError("segment endpoints coincide")

    @property
    def param_range(self) -> tuple[float, float]:
        return (0.0, 1.0)

    def point_at(self, sigma: float) -> np.ndarray:
        ax, ay = self.a
        bx, by = self.b
        return np.array([ax + sigma * (bx - ax), ay + sigma * (by - ay)])

    def tangent_at(self, sigma: float) -> np.ndarray:
        return np.array([self.b[0] - self.a[0], self.b[1] - self.a[1]])

    def endpoints(self) -> list[tuple[float, np.ndarray]]:
        return [(0.0, self.point_at(0.0)), (1.0, self.point_at(1.0))]

    def intersections(self, ox: float, oy: float, dx: float, dy: float
                      ) -> list[tuple[float, float]]:
        """All (t, sigma) with origin + t*dir == a + sigma*(b - a), sigma in [0, 1]."""
        ex = self.b[0] - self.a[0]
        ey = self.b[1] - self.a[1]
        det = dx * (-ey) - dy * (-ex)
        if det == 0.0:  # parallel (collinear overlap is measure zero: ignored)
            return []
        rx = self.a[0] - ox
        ry = self.a[1] - oy
        t = (rx * (-ey) + ry * ex) / det
        sigma = (dx * ry - dy * rx) / det
        if -1e-12 <= sigma <= 1.0 + 1e-12:
            return [(t, min(max(sigma, 0.0), 1.0))]
        return []


@dataclass(frozen=True)
class Arc:
    """Circular-arc interface piece, parametrized by the polar angle sigma.

    ``point(sigma) = center + radius * (cos sigma, sin sigma)`` for
    sigma in [sigma_start, sigma_end]; a span of 2*pi is a closed circle.
    """

    center: tuple[float, float]
    radius: float
    sigma_start: float
    sigma_end: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise GeometryError("arc radius must be positive")
        if not self.sigma_start < self.sigma_end:
            raise GeometryError("arc must have sigma_start < sigma_end")
        if self.sigma_end - self.sigma_start > TWO_PI + 1e-12:
            raise GeometryError("arc span exceeds a full circle")

    @property
    def param_range(self) -> tuple[float, float]:
        return (self.sigma_start, self.sigma_end)

    @property
    def is_closed(self) -> bool:
        return self.sigma_end - self.sigma_start >= TWO_PI - 1e-12

    def point_at(self, sigma: float) -> np.ndarray:
        return np.array([self.center[0] + self.radius * math.cos(sigma),
                         self.center[1] + self.radius * math.sin(sigma)])

    def tangent_at(self, sigma: float) -> np.ndarray:
        return np.array([-self.radius * math.sin(sigma),
                         self.radius * math.cos(sigma)])

    def endpoints(self) -> list[tuple[float, np.ndarray]]:
        if self.is_closed:
            return []
        return [(self.sigma_start, self.point_at(self.sigma_start)),
                (self.sigma_end, self.point_at(self.sigma_end))]

    def _sigma_in_span(self, ang: float) -> float | None:
        # map the polar angle into [sigma_start, sigma_start + 2*pi)
        rel = (ang - self.sigma_start) % TWO_PI
        if rel <= self.sigma_end - self.sigma_start + 1e-12:
            return self.sigma_start + rel
        return None

    def intersections(self, ox: float, oy: float, dx: float, dy: float
                      ) -> list[tuple[float, float]]:
        """All (t, sigma) where the ray meets the arc (quadratic in t)."""
        fx = ox - self.center[0]
        fy = oy - self.center[1]
        b = fx * dx + fy * dy
        c = fx * fx + fy * fy - self.radius * self.radius
        disc = b * b - c
        if disc < 0.0:
            return []
        root = math.sqrt(disc)
        out = []
        for t in (-b - root, -b + root):
            px = fx + t * dx
            py = fy + t * dy
            sigma = self._sigma_in_span(math.atan2(py, px))
            if sigma is not None:
                out.append((t, sigma))
        return out


InterfaceCurve = Segment | Arc


def normal_at(curve: InterfaceCurve, sigma: float) -> np.ndarray:
    """Unit normal at curve parameter sigma (tangent rotated by +90 degrees)."""
    lo, hi = curve.param_range
    if not lo - 1e-12 <= sigma <= hi + 1e-12:
        raise GeometryError(f"parameter {sigma} outside [{lo}, {hi}]")
    tx, ty = curve.tangent_at(sigma)
    return _unit(np.array([-ty, tx]))


def corner_normal(normals: list[np.ndarray], tol: float = 1e-6) -> np.ndarray:
    """Averaged unit normal where several interfaces meet.

    Raises GeometryError when the normals cancel (anti-parallel corner).
    """
    if not normals:
        raise GeometryError("corner needs at least one normal")
    total = np.zeros(2)
    for n in normals:
        total = total + np.asarray(n, dtype=float)
    if math.hypot(total[0], total[1]) < tol:
        raise GeometryError("degenerate corner: normals cancel")
    return _unit(total)


@dataclass(frozen=True)
class Corner:
    """A registered shared point of >= 2 curves with its averaged normal."""

    point: np.ndarray
    curve_indices: tuple[int, ...]
    unit_normal: np.ndarray


@dataclass(frozen=True)
class SurfaceHit:
    """Nearest ray-interface intersection."""

    t: float
    point: np.ndarray
    unit_normal: np.ndarray
    curve_index: int
    is_corner: bool = False


@dataclass(frozen=True)
class InterfaceSet:
    """Immutable collection of a-priori interface curves inside the disk of
    radius ``R``, with corners (coincident endpoints) resolved at construction.
    """

    curves: tuple[InterfaceCurve, ...]
    R: float
    tol: float = 1e-6
    corners: tuple[Corner, ...] = field(init=False)

    def __init__(self, curves=(), R: float = 100.0, tol: float = 1e-6):
        object.__setattr__(self, "curves", tuple(curves))
        object.__setattr__(self, "R", float(R))
        object.__setattr__(self, "tol", float(tol))
        if self.R <= 0:
            raise GeometryError("disk radius must be positive")
        for k, curve in enumerate(self.curves):
            if not _curve_inside_disk(curve, self.R, self.tol):
                raise GeometryError(f"curve {k} leaves the disk of radius {R}")
        object.__setattr__(self, "corners", _build_corners(self.curves, self.tol))

    def __len__(self) -> int:
        return len(self.curves)


def _curve_inside_disk(curve: InterfaceCurve, R: float, tol: float) -> bool:
    if isinstance(curve, Segment):
        far = max(math.hypot(*curve.a), math.hypot(*curve.b))
        return far <= R + tol
    cx, cy = curve.center
    # candidate extrema: endpoints plus the point of the circle farthest
    # from the origin, when its polar angle lies within the arc span
    far = max((math.hypot(p[0], p[1]) for _, p in curve.endpoints()),
              default=0.0)
    if cx == 0.0 and cy == 0.0:
        far = max(far, curve.radius)
    else:
        sigma = curve._sigma_in_span(math.atan2(cy, cx))
        if sigma is not None:
            far = max(far, math.hypot(cx, cy) + curve.radius)
    if curve.is_closed:
        far = max(far, math.hypot(cx, cy) + curve.radius)
    return far <= R + tol


def _build_corners(curves: tuple[InterfaceCurve, ...], tol: float) -> tuple[Corner, ...]:
    """Cluster coincident curve endpoints and average their normals."""
    points: list[tuple[np.ndarray, int, float]] = []  # (point, curve index, sigma)
    for k, curve in enumerate(curves):
        for sigma, pt in curve.endpoints():
            points.append((pt, k, sigma))
    used = [False] * len(points)
    corners: list[Corner] = []
    for i, (pi, ki, si) in enumerate(points):
        if used[i]:
            continue
        cluster = [(pi, ki, si)]
        used[i] = True
        for j in range(i + 1, len(points)):
            if used[j]:
                continue
            pj, kj, sj = points[j]
            if math.dist(tuple(pi), tuple(pj)) <= tol:
                cluster.append((pj, kj, sj))
                used[j] = True
        involved = sorted({k for _, k, _ in cluster})
        if len(involved) < 2:
            continue
        normals = [normal_at(curves[k], s) for _, k, s in cluster]
        try:
            avg = corner_normal(normals, tol)
        except GeometryError:
            warnings.warn(
                f"corner at {tuple(pi)} has cancelling normals; not registered",
                stacklevel=2,
            )
            continue
        mean_pt = np.mean([p for p, _, _ in cluster], axis=0)
        corners.append(Corner(mean_pt, tuple(involved), avg))
    return tuple(corners)


def nearest_hit(iset: InterfaceSet, origin, direction, t_min: float
                ) -> SurfaceHit | None:
    """First interface crossing with t > t_min + tol, or None if the ray
    leaves the disk without meeting a curve.

    Hits within tol of a registered corner return the corner's averaged
    normal with ``is_corner`` set.
    """
    ox, oy = float(origin[0]), float(origin[1])
    dx, dy = float(direction[0]), float(direction[1])
    lo = t_min + iset.tol
    best_t = math.inf
    best_sigma = 0.0
    best_k = -1
    for k, curve in enumerate(iset.curves):
        for t, sigma in curve.intersections(ox, oy, dx, dy):
            if t > lo and t < best_t:
                best_t, best_sigma, best_k = t, sigma, k
    if best_k < 0:
        return None
    point = np.array([ox + best_t * dx, oy + best_t * dy])
    for corner in iset.corners:
        if math.dist(tuple(point), tuple(corner.point)) <= iset.tol:
            return SurfaceHit(best_t, point, corner.unit_normal, best_k, True)
    return SurfaceHit(best_t, point, normal_at(iset.curves[best_k], best_sigma),
                      best_k, False)


def distance_to_set(iset: InterfaceSet, x: np.ndarray, y: np.ndarray
                    ) -> np.ndarray:
    """Distance from points (x, y) to the nearest curve of the set."""
    d = np.full(np.shape(x), np.inf)
    for curve in iset.curves:
        d = np.minimum(d, distance_to_curve(curve, x, y))
    return d


def distance_to_curve(curve: InterfaceCurve, x: np.ndarray, y: np.ndarray
                      ) -> np.ndarray:
    """Euclidean distance from points (x, y) to the curve, vectorized."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(curve, Segment):
        ax, ay = curve.a
        ex = curve.b[0] - ax
        ey = curve.b[1] - ay
        ee = ex * ex + ey * ey
        s = np.clip(((x - ax) * ex + (y - ay) * ey) / ee, 0.0, 1.0)
        return np.hypot(x - (ax + s * ex), y - (ay + s * ey))
    px = x - curve.center[0]
    py = y - curve.center[1]
    ang = np.arctan2(py, px)
    rel = (ang - curve.sigma_start) % TWO_PI
    span = curve.sigma_end - curve.sigma_start
    on_arc = rel <= span
    d = np.abs(np.hypot(px, py) - curve.radius)
    if curve.is_closed:
        return d
    # off-span points are closest to one of the arc endpoints
    ends = curve.endpoints()
    d_ends = np.minimum(
        np.hypot(x - ends[0][1][0], y - ends[0][1][1]),
        np.hypot(x - ends[1][1][0], y - ends[1][1][1]),
    )
    return np.where(on_arc, d, d_ends)


# ---------------------------------------------------------------------------
# declarative file format: a JSON array of curve objects, lengths in mm,
# arc angles in degrees.  Example:
#   [{"type": "segment", "a": [0, 0], "b": [10, 0]},
#    {"type": "arc", "center": [0, 0], "radius": 50, "from": 0, "to": 360}]
# ---------------------------------------------------------------------------

_SEGMENT_KEYS = {"type", "a", "b"}
_ARC_KEYS = {"type", "center", "radius", "from", "to"}


def _curve_from_dict(entry: dict) -> InterfaceCurve:
    kind = entry.get("type")
    if kind == "segment":
        unknown = set(entry) - _SEGMENT_KEYS
        if unknown:
            raise GeometryError(f"unknown segment keys: {sorted(unknown)}")
        return Segment(tuple(map(float, entry["a"])), tuple(map(float, entry["b"])))
    if kind == "arc":
        unknown = set(entry) - _ARC_KEYS
        if unknown:
            raise GeometryError(f"unknown arc keys: {sorted(unknown)}")
        return Arc(tuple(map(float, entry["center"])), float(entry["radius"]),
                   math.radians(float(entry["from"])), math.radians(float(entry["to"])))
    raise GeometryError(f"unknown curve type: {kind!r}")


def _curve_to_dict(curve: InterfaceCurve) -> dict:
    if isinstance(curve, Segment):
        return {"type": "segment", "a": list(curve.a), "b": list(curve.b)}
    return {"type": "arc", "center": list(curve.center), "radius": curve.radius,
            "from": math.degrees(curve.sigma_start),
            "to": math.degrees(curve.sigma_end)}


def load_interfaces(path, R: float, tol: float = 1e-6) -> InterfaceSet:
    """Read an interface-set file (JSON array of curves) for a disk of radius R."""
    with open(path, encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise GeometryError("interface file must contain a JSON array")
    return InterfaceSet([_curve_from_dict(e) for e in entries], R=R, tol=tol)


def save_interfaces(path, iset: InterfaceSet) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([_curve_to_dict(c) for c in iset.curves], fh, indent=1)
        fh.write("\n")
