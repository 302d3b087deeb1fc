"""Pure interface optics: Snell's law with the total-reflection branch,
perpendicular-polarization Fresnel reflectance, and the two-sided refractive
index probe across an interface.

Only perpendicular polarization is implemented; other polarizations are
superpositions of the perpendicular and parallel cases and are not needed
for intensity correction here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["OpticsError", "RefractionEvent", "snell", "fresnel_reflectance",
           "probe_two_sided"]

_INDEX_TOL = 1e-9
_CLAMP_TOL = 1e-12


class OpticsError(ValueError):
    """Unphysical optical input (index below 1, angle out of range, ...)."""


@dataclass(frozen=True)
class RefractionEvent:
    """Outcome of one interface transition.

    gamma1/gamma2 are measured from the interface normal.  For total
    reflection gamma2 = pi - gamma1 and rho = 1 (the ray keeps propagating,
    fully attenuated in the corrected intensity model).
    """

    n1: float
    n2: float
    gamma1: float
    gamma2: float
    total_reflection: bool
    rho: float


def _check_index(n: float) -> None:
    if n < 1.0 - _INDEX_TOL:
        raise OpticsError(f"refractive index {n} below 1 (non-physical medium)")


def snell(n1: float, n2: float, gamma1: float) -> RefractionEvent:
    """Refraction of a ray meeting an interface at incidence angle gamma1.

    Total reflection fires iff n1 > n2 and gamma1 >= arcsin(n2/n1); otherwise
    gamma2 = arcsin(n1 sin(gamma1) / n2), with the arcsin argument clamped
    when within 1e-12 of +-1 to absorb float noise at critical incidence.
    """
    _check_index(n1)
    _check_index(n2)
    if not -_CLAMP_TOL <= gamma1 <= math.pi / 2 + _CLAMP_TOL:
        raise OpticsError(f"incidence angle {gamma1} outside [0, pi/2]")
    gamma1 = min(max(gamma1, 0.0), math.pi / 2)
    if n1 == n2:
        # exactly matched media: keep gamma and rho free of round-off so a
        # homogeneous field is perfectly transparent
        return RefractionEvent(n1, n2, gamma1, gamma1, False, 0.0)
    if n1 > n2 and gamma1 >= math.asin(n2 / n1):
        return RefractionEvent(n1, n2, gamma1, math.pi - gamma1, True, 1.0)
    arg = n1 * math.sin(gamma1) / n2
    if arg > 1.0:
        arg = 1.0  # within 1e-12 of the boundary, else total reflection fired
    gamma2 = math.asin(arg)
    return RefractionEvent(n1, n2, gamma1, gamma2, False,
                           fresnel_reflectance(n1, gamma1, n2, gamma2))


def fresnel_reflectance(n1: float, gamma1: float, n2: float, gamma2: float) -> float:
    """Perpendicular-polarization reflectance
    |(n1 cos g1 - n2 cos g2) / (n1 cos g1 + n2 cos g2)|^2.

    Caller handles total reflection separately (rho = 1 there).
    """
    a = n1 * math.cos(gamma1)
    b = n2 * math.cos(gamma2)
    r = (a - b) / (a + b)
    return r * r


def probe_two_sided(fld, hit_point, unit_normal, incident_direction,
                    eps: float) -> tuple[float, float]:
    """Refractive indices just before (n1) and just after (n2) an interface.

    Samples the field at hit_point -+ eps * normal; which offset is upstream
    is keyed on sign(<incident_direction, normal>).  Samples outside the
    reconstruction disk read as air (index 1).
    """
    if eps <= 0.0:
        raise OpticsError("probe offset eps must be positive")
    px, py = float(hit_point[0]), float(hit_point[1])
    nx, ny = float(unit_normal[0]), float(unit_normal[1])
    n_plus = fld.sample_index(px + eps * nx, py + eps * ny)
    n_minus = fld.sample_index(px - eps * nx, py - eps * ny)
    d = float(incident_direction[0]) * nx + float(incident_direction[1]) * ny
    if d <= 0.0:
        # traveling against the normal: the ray arrives from the +normal side
        return n_plus, n_minus
    return n_minus, n_plus
