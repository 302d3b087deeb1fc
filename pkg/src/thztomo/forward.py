"""Synthetic measurement generation: trace every ray of a scan through the
ground-truth field, integrate absorption and index deviation along the
refracted path, apply interface reflection losses to the intensity, and add
noise calibrated to an exact relative l2 level.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import InterfaceSet
from .model import MaterialField, ScanGeometry
from .raytrace import DEFAULT_CAP, next_offset, trace, traverse_pixels

__all__ = ["Sinogram", "simulate", "add_noise", "write_sinogram_csv",
           "read_sinogram_csv"]


@dataclass
class Sinogram:
    """Per-ray measured pair: transmission coefficient tau (dimensionless)
    and path difference d (mm), plus a validity flag, in scan order."""

    geom: ScanGeometry
    tau: np.ndarray
    d: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        n = self.geom.n_rays
        self.tau = np.asarray(self.tau, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        self.valid = np.asarray(self.valid, dtype=bool)
        if not (self.tau.shape == self.d.shape == self.valid.shape == (n,)):
            raise ValueError(f"sinogram channels must have shape ({n},)")

    def g_ref(self) -> np.ndarray:
        """Path-difference data channel (identical to d)."""
        return self.d.copy()

    def g_abs(self) -> np.ndarray:
        """Uncorrected absorbance ln(1/tau); +inf where tau == 0."""
        out = np.full(self.tau.shape, np.inf)
        pos = self.tau > 0
        out[pos] = -np.log(self.tau[pos])
        return out


def simulate(fld: MaterialField, iset: InterfaceSet, geom: ScanGeometry,
             cap: int = DEFAULT_CAP,
             miss_offset_mm: float | None = None) -> Sinogram:
    """Noise-free forward simulation of the full scan.

    For each ray: tau = exp(-integral of alpha) * prod(1 - rho) over the
    refracted path, d = integral of (n - 1).  Rays that hit the refraction
    cap are marked invalid.

    By default the synthetic detector always receives the ray, however
    strongly it was refracted.  ``miss_offset_mm`` optionally models a
    single fixed detector: a ray whose exit line is displaced from the
    nominal offset by more than this amount records tau = 0 (lost), for
    robustness experiments with the transmission filter.
    """
    n = geom.n_rays
    tau = np.ones(n)
    d = np.zeros(n)
    valid = np.ones(n, dtype=bool)
    alpha_mm = fld.alpha_per_mm.ravel()
    ref = fld.n_minus_1.ravel()
    for nu, _i, _j, phi, s in geom.rays():
        path = trace(iset, fld, phi, s, cap=cap)
        row = traverse_pixels(path, fld.grid)
        if path.truncated:
            tau[nu] = 0.0
            d[nu] = 0.0
            valid[nu] = False
            continue
        absorbance = row.dot(alpha_mm)
        d[nu] = row.dot(ref)
        tau[nu] = math.exp(-absorbance) * path.c_abs
        if miss_offset_mm is not None and path.partials:
            # lateral displacement of the exit point on the detector rail,
            # measured along omega(phi)
            lateral = next_offset(phi, path.partials[-1].end)
            if abs(lateral - s) > miss_offset_mm:
                tau[nu] = 0.0
    return Sinogram(geom, tau, d, valid)


def _calibrated_noise(values: np.ndarray, unit_noise: np.ndarray, level: float,
                      clamp: tuple[float, float] | None) -> np.ndarray:
    """values + scale*unit_noise (then clamped), with the scale chosen so the
    realized relative l2 perturbation equals ``level`` exactly.

    Without clamping the scale is closed-form; with clamping the realized
    perturbation is a continuous nondecreasing function of the scale, so a
    bisection recovers exactness.
    """
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise ValueError("cannot scale noise relative to an all-zero channel")
    target = level * norm
    unit_norm = float(np.linalg.norm(unit_noise))
    if unit_norm == 0.0:
        raise ValueError("degenerate noise draw")
    scale = target / unit_norm
    if clamp is None:
        return values + scale * unit_noise

    def realized(sc: float) -> float:
        noisy = np.clip(values + sc * unit_noise, clamp[0], clamp[1])
        return float(np.linalg.norm(noisy - values))

    lo, hi = 0.0, scale
    while realized(hi) < target:
        hi *= 2.0
        if hi > 1e9 * scale:
            raise ValueError(f"noise level {level} unreachable under clamping")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if realized(mid) < target:
            lo = mid
        else:
            hi = mid
    return np.clip(values + hi * unit_noise, clamp[0], clamp[1])


def add_noise(sino: Sinogram, level: float, rng_seed: int) -> Sinogram:
    """Additive zero-mean uniform noise, independently on the tau and d
    channels, each scaled so that ||g - g_noisy||_2 / ||g||_2 == level.

    tau is clamped to [0, 1] afterwards; the calibration accounts for the
    clamping so the realized level still holds exactly.  Deterministic for a
    fixed seed; level 0 returns an identical copy.
    """
    if level < 0:
        raise ValueError("noise level must be >= 0")
    if level == 0:
        return Sinogram(sino.geom, sino.tau.copy(), sino.d.copy(), sino.valid.copy())
    rng = np.random.default_rng(rng_seed)
    u_tau = rng.uniform(-1.0, 1.0, sino.tau.shape)
    u_d = rng.uniform(-1.0, 1.0, sino.d.shape)
    tau = _calibrated_noise(sino.tau, u_tau, level, clamp=(0.0, 1.0))
    d = _calibrated_noise(sino.d, u_d, level, clamp=None)
    return Sinogram(sino.geom, tau, d, sino.valid.copy())


# ---------------------------------------------------------------------------
# CSV format: header i,j,phi_rad,s_mm,tau,d_mm,valid; floats written with
# repr() so the round trip is bit-exact
# ---------------------------------------------------------------------------


def write_sinogram_csv(path, sino: Sinogram) -> None:
    angles = sino.geom.angles()
    offsets = sino.geom.offsets()
    q = sino.geom.q
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "phi_rad", "s_mm", "tau", "d_mm", "valid"])
        for nu, i, j, _phi, _s in sino.geom.rays():
            w.writerow([i, j, repr(float(angles[i - 1])),
                        repr(float(offsets[j + q])),
                        repr(float(sino.tau[nu])), repr(float(sino.d[nu])),
                        int(sino.valid[nu])])


def read_sinogram_csv(path) -> Sinogram:
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["i", "j", "phi_rad", "s_mm", "tau", "d_mm", "valid"]:
            raise ValueError(f"unexpected sinogram header: {header}")
        rows = list(reader)
    if not rows:
        raise ValueError("empty sinogram file")
    i_vals = np.array([int(r[0]) for r in rows])
    j_vals = np.array([int(r[1]) for r in rows])
    s_vals = np.array([float(r[3]) for r in rows])
    p = int(i_vals.max())
    q = int(j_vals.max())
    R = float(s_vals.max()) if q else 1.0
    geom = ScanGeometry(p=p, q=q, R=R)
    if len(rows) != geom.n_rays:
        raise ValueError("sinogram row count does not match its geometry")
    tau = np.empty(geom.n_rays)
    d = np.empty(geom.n_rays)
    valid = np.empty(geom.n_rays, dtype=bool)
    for r in rows:
        nu = geom.ray_index(int(r[0]), int(r[1]))
        tau[nu] = float(r[4])
        d[nu] = float(r[5])
        valid[nu] = bool(int(r[6]))
    return Sinogram(geom, tau, d, valid)
