"""Physical measurement model: material fields on a pixel grid, the parallel
scan geometry, and the unit conversions tying (n - 1, alpha) to observables.

Unit policy: every length in this package is mm.  The absorption coefficient
alpha is carried in 1/cm (the customary unit for these materials) and is
converted exactly once, via :attr:`MaterialField.alpha_per_mm`, where line
integrals in mm need it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "C0_MM_PER_S",
    "GridSpec",
    "MaterialField",
    "ScanGeometry",
    "kappa_from_alpha",
    "alpha_from_kappa",
    "absorbance_from_tau",
    "path_difference_integrand",
    "write_grid_channel",
    "read_grid_channel",
]

C0_MM_PER_S = 2.99792458e11
"""Speed of light in mm/s."""

_CM_PER_MM = 0.1
_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Square-pixel grid centered on the reconstruction disk of radius R (mm).

    Row index i runs along +y, column index j along +x; the flat pixel index
    is ``mu = i * cols + j``.
    """

    R: float
    rows: int
    cols: int
    h: float

    def __post_init__(self):
        if self.h <= 0 or self.R <= 0:
            raise ValueError("pixel size and disk radius must be positive")
        if self.rows * self.h < 2 * self.R - 1e-9 or self.cols * self.h < 2 * self.R - 1e-9:
            raise ValueError("grid does not cover the reconstruction disk")

    @property
    def x0(self) -> float:
        return -0.5 * self.cols * self.h

    @property
    def y0(self) -> float:
        return -0.5 * self.rows * self.h

    @property
    def n_pixels(self) -> int:
        return self.rows * self.cols

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (X, Y) of pixel-center coordinates, shape (rows, cols)."""
        xs = self.x0 + (np.arange(self.cols) + 0.5) * self.h
        ys = self.y0 + (np.arange(self.rows) + 0.5) * self.h
        return np.meshgrid(xs, ys)

    def pixel_of(self, x: float, y: float) -> tuple[int, int] | None:
        """(i, j) of the pixel containing the point, or None if outside."""
        j = math.floor((x - self.x0) / self.h)
        i = math.floor((y - self.y0) / self.h)
        if 0 <= i < self.rows and 0 <= j < self.cols:
            return i, j
        return None

    @staticmethod
    def square(R: float, n: int) -> "GridSpec":
        """n-by-n grid exactly covering the disk of radius R."""
        return GridSpec(R=R, rows=n, cols=n, h=2.0 * R / n)


class MaterialField:
    """Pixelized material parameters over the reconstruction disk.

    Carries the two real channels of the complex refractive index: the
    refractive-index deviation ``n_minus_1`` (dimensionless) and the
    absorption coefficient ``alpha`` in 1/cm.
    """

    def __init__(self, grid: GridSpec, n_minus_1=None, alpha=None,
                 frequency_hz: float = 100e9):
        self.grid = grid
        shape = (grid.rows, grid.cols)
        self.n_minus_1 = (np.zeros(shape) if n_minus_1 is None
                          else np.asarray(n_minus_1, dtype=float))
        self.alpha = (np.zeros(shape) if alpha is None
                      else np.asarray(alpha, dtype=float))
        if self.n_minus_1.shape != shape or self.alpha.shape != shape:
            raise ValueError(f"channel arrays must have shape {shape}")
        if frequency_hz <= 0:
            raise ValueError("frequency must be positive")
        self.frequency_hz = frequency_hz

    @property
    def alpha_per_mm(self) -> np.ndarray:
        """Absorption channel converted 1/cm -> 1/mm (the single unit seam)."""
        return self.alpha * _CM_PER_MM

    def sample_index(self, x: float, y: float) -> float:
        """Refractive index at a point; air (1.0) outside the disk or grid.

        Nearest-pixel sampling, deliberately without interpolation: the model
        is piecewise constant and interpolation would blur interfaces.
        """
        if x * x + y * y >= self.grid.R * self.grid.R:
            return 1.0
        ij = self.grid.pixel_of(x, y)
        if ij is None:
            return 1.0
        return 1.0 + float(self.n_minus_1[ij])

    def complex_index(self) -> np.ndarray:
        """Display helper: (1 + n_minus_1) + i*kappa at the field's frequency."""
        return (1.0 + self.n_minus_1) + 1j * kappa_from_alpha(self.alpha, self.frequency_hz)

    def validate(self, tol: float = 1e-9) -> None:
        if np.any(self.n_minus_1 < -tol) or np.any(self.alpha < -tol):
            raise ValueError("negative refractive-index deviation or absorption")


@dataclass(frozen=True)
class ScanGeometry:
    """Parallel scan: p initial angles over [0, 2*pi), offsets s_j = (R/q)*j.

    Angles deliberately span the full circle: refracted data generally has
    g(phi + pi, -s) != g(phi, s), so no half-turn folding is allowed anywhere.
    """

    p: int
    q: int
    R: float

    def __post_init__(self):
        if self.p < 1 or self.q < 1 or self.R <= 0:
            raise ValueError("need p >= 1, q >= 1, R > 0")

    @property
    def n_offsets(self) -> int:
        return 2 * self.q + 1

    @property
    def n_rays(self) -> int:
        return self.p * self.n_offsets

    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.p) / self.p

    def offsets(self) -> np.ndarray:
        return (self.R / self.q) * np.arange(-self.q, self.q + 1)

    def ray_index(self, i: int, j: int) -> int:
        """Flat ray index for angle number i in 1..p and offset number j in -q..q."""
        return (i - 1) * self.n_offsets + (j + self.q)

    def rays(self):
        """Yield (nu, i, j, phi, s) in the canonical enumeration order."""
        angles = self.angles()
        offsets = self.offsets()
        nu = 0
        for i in range(1, self.p + 1):
            phi = angles[i - 1]
            for j in range(-self.q, self.q + 1):
                yield nu, i, j, phi, offsets[j + self.q]
                nu += 1


def kappa_from_alpha(alpha_cm, frequency_hz: float):
    """Imaginary index part kappa = alpha * c0 / (4*pi*f), alpha in 1/cm."""
    if frequency_hz <= 0:
        raise ValueError("frequency must be positive")
    c0_cm = C0_MM_PER_S * _CM_PER_MM
    return np.asarray(alpha_cm, dtype=float) * c0_cm / (4.0 * math.pi * frequency_hz)


def alpha_from_kappa(kappa, frequency_hz: float):
    """Inverse of :func:`kappa_from_alpha`; returns alpha in 1/cm."""
    if frequency_hz <= 0:
        raise ValueError("frequency must be positive")
    c0_cm = C0_MM_PER_S * _CM_PER_MM
    return np.asarray(kappa, dtype=float) * 4.0 * math.pi * frequency_hz / c0_cm


def absorbance_from_tau(tau: float) -> float:
    """Lambert-Beer absorbance ln(1/tau).

    tau <= 0 marks a lost ray; returns +inf as the invalid-measurement marker
    instead of raising (such rays are dropped by transmission filtering).
    """
    if tau <= 0.0:
        return math.inf
    return math.log(1.0 / tau)


def path_difference_integrand(fld: MaterialField) -> np.ndarray:
    """The n - 1 channel, integrated along rays to give the path difference d.

    Exists so the sign/offset convention (index deviation from air, d >= 0
    inside denser media) is pinned in exactly one place.
    """
    return fld.n_minus_1


# ---------------------------------------------------------------------------
# grid channel I/O: NAME.f64 holds the flat little-endian float64 array in
# row-major order, NAME.json the header.
# ---------------------------------------------------------------------------


def write_grid_channel(path_prefix, grid: GridSpec, values: np.ndarray,
                       channel: str, units: str) -> None:
    prefix = Path(path_prefix)
    arr = np.ascontiguousarray(np.asarray(values, dtype="<f8"))
    if arr.shape != (grid.rows, grid.cols):
        raise ValueError("array shape does not match grid")
    header = {
        "rows": grid.rows,
        "cols": grid.cols,
        "h": grid.h,
        "R": grid.R,
        "channel": channel,
        "units": units,
    }
    prefix.with_suffix(".f64").write_bytes(arr.tobytes())
    with open(prefix.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(header, fh, sort_keys=True, indent=1)
        fh.write("\n")


def read_grid_channel(path_prefix) -> tuple[GridSpec, np.ndarray, dict]:
    prefix = Path(path_prefix)
    with open(prefix.with_suffix(".json"), encoding="utf-8") as fh:
        header = json.load(fh)
    grid = GridSpec(R=header["R"], rows=header["rows"], cols=header["cols"],
                    h=header["h"])
    raw = prefix.with_suffix(".f64").read_bytes()
    arr = np.frombuffer(raw, dtype="<f8")
    if arr.size != grid.n_pixels:
        raise ValueError("data length does not match header")
    return grid, arr.reshape(grid.rows, grid.cols).copy(), header
