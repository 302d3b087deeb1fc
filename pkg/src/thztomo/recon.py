"""Algebraic reconstruction: row-action Kaczmarz sweeps over the ray system,
in a conventional straight-ray variant and a refraction-aware variant that
rebuilds the system matrix and the reflection-corrected intensity data from
the current index estimate between sweeps.

Both channels (index deviation and absorption) are updated within the same
pass over the rays, sharing each row's traversal lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import InterfaceSet
from .forward import Sinogram
from .model import GridSpec, MaterialField
from .raytrace import DEFAULT_CAP, trace, traverse_pixels

__all__ = ["ReconError", "ReconConfig", "SystemMatrix", "build_system_matrix",
           "kaczmarz_sweep", "filter_rays", "conventional_art", "modified_art"]

_ALPHA_MM_TO_CM = 10.0


class ReconError(RuntimeError):
    """Reconstruction cannot proceed (e.g. every ray filtered out)."""


@dataclass(frozen=True)
class SystemMatrix:
    """CSR-style sparse ray-traversal matrix plus per-row metadata."""

    indptr: np.ndarray     # (N+1,) int64
    indices: np.ndarray    # int32 flat pixel indices
    data: np.ndarray       # traversal lengths, mm
    norm_sq: np.ndarray    # (N,) squared row norms
    c_abs: np.ndarray      # (N,) reflection-loss factors prod(1 - rho)
    valid: np.ndarray      # (N,) bool; zero-norm, truncated and fully
                           # reflected rows are invalidated here

    @property
    def n_rows(self) -> int:
        return self.norm_sq.size

    def row(self, nu: int) -> tuple[np.ndarray, np.ndarray]:
        sl = slice(self.indptr[nu], self.indptr[nu + 1])
        return self.indices[sl], self.data[sl]

    def dot(self, flat_field: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_rows)
        for nu in range(self.n_rows):
            idx, vals = self.row(nu)
            out[nu] = np.dot(vals, flat_field[idx])
        return out


def build_system_matrix(iset: InterfaceSet, fld: MaterialField,
                        geom, grid: GridSpec, cap: int = DEFAULT_CAP,
                        eps: float | None = None) -> SystemMatrix:
    """Trace every scan ray through ``fld`` and collect traversal rows.

    ``fld`` supplies the refractive index the rays bend on (the current
    estimate during reconstruction, the ground truth in experiments); the
    rows discretize on ``grid``.
    """
    n = geom.n_rays
    indptr = np.zeros(n + 1, dtype=np.int64)
    chunks_idx = []
    chunks_len = []
    norm_sq = np.zeros(n)
    c_abs = np.ones(n)
    valid = np.ones(n, dtype=bool)
    for nu, _i, _j, phi, s in geom.rays():
        path = trace(iset, fld, phi, s, cap=cap, eps=eps)
        row = traverse_pixels(path, grid)
        indptr[nu + 1] = indptr[nu] + row.indices.size
        chunks_idx.append(row.indices)
        chunks_len.append(row.lengths)
        norm_sq[nu] = row.norm_sq
        c_abs[nu] = row.c_abs
        valid[nu] = row.valid and row.norm_sq > 0.0 and row.c_abs > 0.0
    indices = (np.concatenate(chunks_idx) if chunks_idx
               else np.empty(0, dtype=np.int32))
    data = np.concatenate(chunks_len) if chunks_len else np.empty(0)
    return SystemMatrix(indptr, indices, data, norm_sq, c_abs, valid)


@dataclass(frozen=True)
class ReconConfig:
    """Schedule for the sweep-based reconstructions.

    psi[i] inner Kaczmarz iterations run in outer sweep i with relaxations
    lam_ref[i] / lam_abs[i]; a relaxation of exactly 0 skips that channel
    for the sweep (the shared pass over the rays still runs once).
    """

    psi: tuple[int, ...]
    lam_ref: tuple[float, ...]
    lam_abs: tuple[float, ...]
    eps_miss: float = 0.0
    exterior_reset: bool = False
    fresnel_correction: bool = True
    sweep_order: str = "natural"   # or "random": seeded permutation per pass
    seed: int = 0
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if not (len(self.psi) == len(self.lam_ref) == len(self.lam_abs)):
            raise ValueError("psi, lam_ref and lam_abs must have equal length")
        if any(r < 1 for r in self.psi):
            raise ValueError("iteration counts must be >= 1")
        for lam in (*self.lam_ref, *self.lam_abs):
            if not 0.0 <= lam < 2.0:
                raise ValueError(f"relaxation {lam} outside [0, 2)")
        if not 0.0 <= self.eps_miss < 1.0:
            raise ValueError("eps_miss must lie in [0, 1)")
        if self.sweep_order not in ("natural", "random"):
            raise ValueError(f"unknown sweep order {self.sweep_order!r}")

    @property
    def n_sweeps(self) -> int:
        return len(self.psi)


def filter_rays(sino: Sinogram, eps_miss: float) -> np.ndarray:
    """Validity mask dropping rays with tau <= eps_miss (presumed to have
    missed the detector); both data channels are dropped for such rays."""
    if not 0.0 <= eps_miss < 1.0:
        raise ValueError("eps_miss must lie in [0, 1)")
    return sino.valid & (sino.tau > eps_miss)


def _row_order(n: int, cfg: ReconConfig) -> np.ndarray:
    if cfg.sweep_order == "natural":
        return np.arange(n)
    return np.random.default_rng(cfg.seed).permutation(n)


def kaczmarz_sweep(F: np.ndarray, matrix: SystemMatrix, g: np.ndarray,
                   lam: float, iterations: int,
                   order: np.ndarray | None = None) -> np.ndarray:
    """``iterations`` full row passes of the relaxed Kaczmarz update
    F += lam * (g_nu - <a_nu, F>) / ||a_nu||^2 * a_nu, skipping invalid rows.
    Returns a new array; lam == 0 is a no-op."""
    F = np.array(F, dtype=float)
    if lam == 0.0 or iterations == 0:
        return F
    if order is None:
        order = np.arange(matrix.n_rows)
    indptr, indices, data = matrix.indptr, matrix.indices, matrix.data
    norm_sq, valid = matrix.norm_sq, matrix.valid
    for _ in range(iterations):
        for nu in order:
            if not valid[nu]:
                continue
            sl = slice(indptr[nu], indptr[nu + 1])
            idx = indices[sl]
            vals = data[sl]
            resid = g[nu] - np.dot(vals, F[idx])
            F[idx] += (lam * resid / norm_sq[nu]) * vals
    return F


def _dual_sweep(F_ref, F_abs, matrix, g_ref, g_abs, lam_ref, lam_abs,
                iterations, order):
    """Shared pass updating both channels row by row (in place)."""
    indptr, indices, data = matrix.indptr, matrix.indices, matrix.data
    norm_sq, valid = matrix.norm_sq, matrix.valid
    do_ref = lam_ref != 0.0
    do_abs = lam_abs != 0.0
    for _ in range(iterations):
        for nu in order:
            if not valid[nu]:
                continue
            sl = slice(indptr[nu], indptr[nu + 1])
            idx = indices[sl]
            vals = data[sl]
            inv = 1.0 / norm_sq[nu]
            if do_ref:
                resid = g_ref[nu] - np.dot(vals, F_ref[idx])
                F_ref[idx] += (lam_ref * resid * inv) * vals
            if do_abs:
                resid = g_abs[nu] - np.dot(vals, F_abs[idx])
                F_abs[idx] += (lam_abs * resid * inv) * vals


def _residual_norms(matrix, F_ref, F_abs, g_ref, g_abs, valid):
    r_ref = 0.0
    r_abs = 0.0
    for nu in np.flatnonzero(valid):
        idx, vals = matrix.row(nu)
        r_ref += (g_ref[nu] - np.dot(vals, F_ref[idx])) ** 2
        r_abs += (g_abs[nu] - np.dot(vals, F_abs[idx])) ** 2
    return math.sqrt(r_ref), math.sqrt(r_abs)


def _corrected_absorbance(sino: Sinogram, c_abs: np.ndarray,
                          valid: np.ndarray) -> np.ndarray:
    """Reflection-corrected absorbance ln(c_abs / tau) on valid rays."""
    g = np.zeros(sino.tau.shape)
    idx = np.flatnonzero(valid)
    g[idx] = np.log(c_abs[idx] / sino.tau[idx])
    return g


def _result_field(grid: GridSpec, F_ref: np.ndarray, F_abs: np.ndarray
                  ) -> MaterialField:
    shape = (grid.rows, grid.cols)
    return MaterialField(grid, F_ref.reshape(shape),
                         _ALPHA_MM_TO_CM * F_abs.reshape(shape))


def conventional_art(sino: Sinogram, grid: GridSpec, cfg: ReconConfig
                     ) -> MaterialField:
    """Straight-ray dual-channel ART: one system matrix computed without
    interfaces or reflection losses, data g_ref = d and g_abs = ln(1/tau)."""
    empty = InterfaceSet((), R=sino.geom.R)
    matrix = build_system_matrix(empty, MaterialField(grid), sino.geom, grid,
                                 cap=cfg.cap)
    valid = filter_rays(sino, cfg.eps_miss) & matrix.valid
    if not valid.any():
        raise ReconError("no valid rays left after filtering")
    matrix = SystemMatrix(matrix.indptr, matrix.indices, matrix.data,
                          matrix.norm_sq, matrix.c_abs, valid)
    g_ref = sino.d
    g_abs = _corrected_absorbance(sino, np.ones(sino.tau.shape), valid)
    F_ref = np.zeros(grid.n_pixels)
    F_abs = np.zeros(grid.n_pixels)
    order = _row_order(matrix.n_rows, cfg)
    for i in range(cfg.n_sweeps):
        _dual_sweep(F_ref, F_abs, matrix, g_ref, g_abs,
                    cfg.lam_ref[i], cfg.lam_abs[i], cfg.psi[i], order)
    return _result_field(grid, F_ref, F_abs)


def modified_art(sino: Sinogram, iset: InterfaceSet, grid: GridSpec,
                 cfg: ReconConfig, footprint: np.ndarray | None = None,
                 residual_log: list | None = None) -> MaterialField:
    """Refraction-aware ART.

    Each outer sweep i rebuilds the ray paths, the system matrix and the
    reflection-corrected absorbance ln(c_abs/tau) from the current index
    estimate, then runs psi[i] Kaczmarz iterations on both channels.  With a
    zero initial estimate the first sweep sees straight rays and c_abs = 1,
    i.e. it coincides with conventional ART.

    ``footprint`` (boolean pixel mask of the a-priori object region) is
    required when cfg.exterior_reset is set: both channels are zeroed outside
    it after each sweep, so the next rebuild refracts at an actual index
    discontinuity and the returned field has a clean exterior.
    """
    if cfg.exterior_reset and footprint is None:
        raise ValueError("exterior_reset needs the a-priori object footprint")
    valid0 = filter_rays(sino, cfg.eps_miss)
    if not valid0.any():
        raise ReconError("no valid rays left after filtering")
    outside = None if footprint is None else ~footprint.ravel()
    F_ref = np.zeros(grid.n_pixels)
    F_abs = np.zeros(grid.n_pixels)
    order = None
    for i in range(cfg.n_sweeps):
        estimate = _result_field(grid, F_ref, F_abs)
        matrix = build_system_matrix(iset, estimate, sino.geom, grid, cap=cfg.cap)
        valid = valid0 & matrix.valid
        if not valid.any():
            raise ReconError(f"sweep {i + 1}: every ray invalid")
        matrix = SystemMatrix(matrix.indptr, matrix.indices, matrix.data,
                              matrix.norm_sq, matrix.c_abs, valid)
        c_abs = matrix.c_abs if cfg.fresnel_correction else np.ones(sino.tau.shape)
        g_abs = _corrected_absorbance(sino, c_abs, valid)
        g_ref = sino.d
        if order is None:
            order = _row_order(matrix.n_rows, cfg)
        _dual_sweep(F_ref, F_abs, matrix, g_ref, g_abs,
                    cfg.lam_ref[i], cfg.lam_abs[i], cfg.psi[i], order)
        if cfg.exterior_reset:
            F_ref[outside] = 0.0
            F_abs[outside] = 0.0
        if residual_log is not None:
            r_ref, r_abs = _residual_norms(matrix, F_ref, F_abs, g_ref, g_abs, valid)
            residual_log.append({"sweep": i + 1, "residual_ref": r_ref,
                                 "residual_abs": r_abs,
                                 "valid_rays": int(valid.sum())})
    return _result_field(grid, F_ref, F_abs)
