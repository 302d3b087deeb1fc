"""Ground-truth test objects: piecewise-constant material regions, their
rasterization on a pixel grid, and the matching a-priori interface sets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Arc, InterfaceSet, Segment
from .model import GridSpec, MaterialField

__all__ = ["Disk", "Rect", "Polygon", "PhantomRegion", "rasterize",
           "interfaces_of", "footprint_mask", "circle_with_rectangle",
           "glued_blocks", "load_phantom", "save_phantom"]


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float
    n: float
    alpha: float

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return ((x - self.center[0]) ** 2 + (y - self.center[1]) ** 2
                <= self.radius ** 2)

    def boundary_curves(self) -> list:
        return [Arc(self.center, self.radius, 0.0, 2.0 * math.pi)]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle given by center and full side lengths."""

    center: tuple[float, float]
    width: float
    height: float
    n: float
    alpha: float

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return ((np.abs(x - self.center[0]) <= 0.5 * self.width)
                & (np.abs(y - self.center[1]) <= 0.5 * self.height))

    def corners(self) -> list[tuple[float, float]]:
        cx, cy = self.center
        w, h = 0.5 * self.width, 0.5 * self.height
        return [(cx - w, cy - h), (cx + w, cy - h), (cx + w, cy + h), (cx - w, cy + h)]

    def boundary_curves(self) -> list:
        pts = self.corners()
        return [Segment(pts[k], pts[(k + 1) % 4]) for k in range(4)]


@dataclass(frozen=True)
class Polygon:
    """Convex polygon with counter-clockwise vertices."""

    vertices: tuple[tuple[float, float], ...]
    n: float
    alpha: float

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise ValueError("polygon needs at least 3 vertices")

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        inside = np.ones(np.shape(x), dtype=bool)
        verts = self.vertices
        for k in range(len(verts)):
            ax, ay = verts[k]
            bx, by = verts[(k + 1) % len(verts)]
            inside &= (bx - ax) * (y - ay) - (by - ay) * (x - ax) >= 0.0
        return inside

    def boundary_curves(self) -> list:
        verts = self.vertices
        return [Segment(verts[k], verts[(k + 1) % len(verts)])
                for k in range(len(verts))]


PhantomRegion = Disk | Rect | Polygon


def _validate(regions) -> None:
    for reg in regions:
        if reg.n < 1.0 or reg.alpha < 0.0:
            raise ValueError("regions need n >= 1 and alpha >= 0")


def rasterize(regions, grid: GridSpec, frequency_hz: float = 100e9) -> MaterialField:
    """Pixel-center sampling of the region stack; later regions overwrite
    earlier ones, air elsewhere."""
    _validate(regions)
    X, Y = grid.centers()
    n_minus_1 = np.zeros((grid.rows, grid.cols))
    alpha = np.zeros((grid.rows, grid.cols))
    for reg in regions:
        mask = reg.contains(X, Y)
        n_minus_1[mask] = reg.n - 1.0
        alpha[mask] = reg.alpha
    return MaterialField(grid, n_minus_1, alpha, frequency_hz)


def interfaces_of(regions, R: float, tol: float = 1e-6) -> InterfaceSet:
    """A-priori interface set holding every region boundary.

    Boundaries of touching regions are emitted as-is; a coincident duplicate
    edge still refracts only once because a crossing excludes re-hits at the
    same ray parameter.
    """
    _validate(regions)
    curves = []
    for reg in regions:
        curves.extend(reg.boundary_curves())
    return InterfaceSet(curves, R=R, tol=tol)


def footprint_mask(regions, grid: GridSpec) -> np.ndarray:
    """Boolean pixel mask of the union of the regions (the object footprint)."""
    X, Y = grid.centers()
    mask = np.zeros((grid.rows, grid.cols), dtype=bool)
    for reg in regions:
        mask |= reg.contains(X, Y)
    return mask


def circle_with_rectangle(disk_radius: float = 50.0, disk_n: float = 1.4,
                          disk_alpha: float = 0.05,
                          rect_center: tuple[float, float] = (12.0, 8.0),
                          rect_width: float = 25.0, rect_height: float = 20.0,
                          rect_n: float = 1.7, rect_alpha: float = 0.25
                          ) -> list[PhantomRegion]:
    """The canonical synthetic object: an absorbing disk with an embedded,
    denser rectangle (off-center, so refracted data is direction-asymmetric).
    """
    return [Disk((0.0, 0.0), disk_radius, disk_n, disk_alpha),
            Rect(rect_center, rect_width, rect_height, rect_n, rect_alpha)]


def glued_blocks(n_values: tuple[float, ...] = (1.54, 1.60, 1.53, 1.55, 1.51),
                 alpha_values: tuple[float, ...] = (0.08, 0.10, 0.07, 0.09, 0.06),
                 width: float = 90.0, height: float = 60.0
                 ) -> tuple[list[PhantomRegion], list]:
    """Five plastic blocks glued into one rectangle: two on top, three below.

    Index/absorption defaults are placeholders for experimentation, not
    calibrated material values; the only fixed ordering is that block 2
    (middle top) carries the highest and block 5 (bottom right) the lowest
    refractive index.  Returns (regions, interface_curves) with the internal
    glue lines listed once.
    """
    if len(n_values) != 5 or len(alpha_values) != 5:
        raise ValueError("expected 5 refractive indices and 5 absorptions")
    w2, h2 = 0.5 * width, 0.5 * height
    top = [Rect((-0.5 * w2, h2 / 2), w2, h2, n_values[0], alpha_values[0]),
           Rect((+0.5 * w2, h2 / 2), w2, h2, n_values[1], alpha_values[1])]
    wb = width / 3.0
    bottom = [Rect(((k - 1) * wb, -h2 / 2), wb, h2, n_values[2 + k], alpha_values[2 + k])
              for k in range(3)]
    regions = top + bottom
    outer = Rect((0.0, 0.0), width, height, 1.0, 0.0)
    curves = outer.boundary_curves()
    curves.append(Segment((-w2, 0.0), (w2, 0.0)))          # horizontal glue line
    curves.append(Segment((0.0, 0.0), (0.0, h2)))          # top divider
    curves.append(Segment((-w2 + wb, -h2), (-w2 + wb, 0.0)))
    curves.append(Segment((w2 - wb, -h2), (w2 - wb, 0.0)))
    return regions, curves


# ---------------------------------------------------------------------------
# phantom description file: {"R": mm, "regions": [...]}, same dialect as the
# interface files (lengths in mm)
# ---------------------------------------------------------------------------

_KEY_SETS = {
    "disk": {"shape", "center", "radius", "n", "alpha"},
    "rect": {"shape", "center", "width", "height", "n", "alpha"},
    "polygon": {"shape", "vertices", "n", "alpha"},
}


def _region_from_dict(entry: dict) -> PhantomRegion:
    shape = entry.get("shape")
    if shape not in _KEY_SETS:
        raise ValueError(f"unknown region shape: {shape!r}")
    unknown = set(entry) - _KEY_SETS[shape]
    if unknown:
        raise ValueError(f"unknown {shape} keys: {sorted(unknown)}")
    if shape == "disk":
        return Disk(tuple(map(float, entry["center"])), float(entry["radius"]),
                    float(entry["n"]), float(entry["alpha"]))
    if shape == "rect":
        return Rect(tuple(map(float, entry["center"])), float(entry["width"]),
                    float(entry["height"]), float(entry["n"]), float(entry["alpha"]))
    return Polygon(tuple(tuple(map(float, v)) for v in entry["vertices"]),
                   float(entry["n"]), float(entry["alpha"]))


def _region_to_dict(reg: PhantomRegion) -> dict:
    if isinstance(reg, Disk):
        return {"shape": "disk", "center": list(reg.center), "radius": reg.radius,
                "n": reg.n, "alpha": reg.alpha}
    if isinstance(reg, Rect):
        return {"shape": "rect", "center": list(reg.center), "width": reg.width,
                "height": reg.height, "n": reg.n, "alpha": reg.alpha}
    return {"shape": "polygon", "vertices": [list(v) for v in reg.vertices],
            "n": reg.n, "alpha": reg.alpha}


def load_phantom(path) -> tuple[float, list[PhantomRegion]]:
    """Read a phantom file; returns (disk radius R, regions)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    unknown = set(doc) - {"R", "regions"}
    if unknown:
        raise ValueError(f"unknown phantom keys: {sorted(unknown)}")
    regions = [_region_from_dict(e) for e in doc["regions"]]
    _validate(regions)
    return float(doc["R"]), regions


def save_phantom(path, R: float, regions) -> None:
    doc = {"R": R, "regions": [_region_to_dict(r) for r in regions]}
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
