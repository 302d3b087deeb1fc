"""Independent oracles shared by the test modules.

Everything here deliberately avoids the library's own refraction case table
and grid walker: refraction uses the vector form of Snell's law, pixel chord
lengths come from per-pixel box clipping, and the disk path from a
closed-form two-refraction solution.
"""

from __future__ import annotations

import math

import numpy as np


def vector_refract(u: np.ndarray, n_hat: np.ndarray, n1: float, n2: float
                   ) -> np.ndarray | None:
    """Refracted unit direction by the vector form of Snell's law;
    None on total internal reflection."""
    m = n_hat if float(np.dot(u, n_hat)) < 0 else -n_hat
    ci = -float(np.dot(u, m))
    eta = n1 / n2
    k = 1.0 - eta * eta * (1.0 - ci * ci)
    if k < 0.0:
        return None
    return eta * u + (eta * ci - math.sqrt(k)) * m


def disk_two_refraction(phi: float, s: float, rc: float, n_inside: float
                        ) -> tuple[np.ndarray, np.ndarray] | None:
    """Closed-form path of a ray through a centered disk of radius rc:
    returns (exit point, exit unit direction), or None if the ray misses."""
    if abs(s) >= rc:
        return None
    omega = np.array([math.cos(phi), math.sin(phi)])
    u = np.array([-omega[1], omega[0]])
    t_entry = -math.sqrt(rc * rc - s * s)
    entry = s * omega + t_entry * u
    u1 = vector_refract(u, entry / rc, 1.0, n_inside)
    assert u1 is not None
    chord = -2.0 * float(np.dot(entry, u1))
    exit_pt = entry + chord * u1
    u2 = vector_refract(u1, exit_pt / rc, n_inside, 1.0)
    assert u2 is not None
    return exit_pt, u2


def boxclip_lengths(grid, phi: float, s: float) -> np.ndarray:
    """Straight-ray chord length inside every pixel, clipped to the disk.

    Liang-Barsky style clipping of the t-interval against each pixel box,
    fully independent of the incremental grid walker.
    """
    ox = s * math.cos(phi)
    oy = s * math.sin(phi)
    dx = -math.sin(phi)
    dy = math.cos(phi)
    R = grid.R
    if s * s >= R * R:
        return np.zeros((grid.rows, grid.cols))
    t_in = -math.sqrt(R * R - s * s)
    t_out = -t_in
    xs = grid.x0 + np.arange(grid.cols + 1) * grid.h
    ys = grid.y0 + np.arange(grid.rows + 1) * grid.h

    def axis_interval(o, d, lo, hi):
        if d == 0.0:
            # half-open boxes: a ray exactly on a grid line belongs to the
            # upper cell, matching floor-based pixel attribution
            inside = (lo <= o) & (o < hi)
            t0 = np.where(inside, -np.inf, np.inf)
            t1 = np.where(inside, np.inf, -np.inf)
            return t0, t1
        ta = (lo - o) / d
        tb = (hi - o) / d
        return np.minimum(ta, tb), np.maximum(ta, tb)

    tx0, tx1 = axis_interval(ox, dx, xs[:-1], xs[1:])      # per column
    ty0, ty1 = axis_interval(oy, dy, ys[:-1], ys[1:])      # per row
    enter = np.maximum(np.maximum(ty0[:, None], tx0[None, :]), t_in)
    leave = np.minimum(np.minimum(ty1[:, None], tx1[None, :]), t_out)
    return np.clip(leave - enter, 0.0, None)


def cross2(a, b) -> float:
    return float(a[0]) * float(b[1]) - float(a[1]) * float(b[0])


def direction_angle_between(u: np.ndarray, v: np.ndarray) -> float:
    return abs(math.atan2(cross2(u, v), float(np.dot(u, v))))
