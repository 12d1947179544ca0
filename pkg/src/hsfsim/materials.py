"""Complex permittivity and Fresnel reflection for plain building surfaces.

Walls are homogeneous half-spaces. Conductivity follows the power law
``sigma(f) = c_sigma * f_GHz ** d_sigma`` used by ITU-R P.2040 tables.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional


class Polarization(Enum):
    TE = "TE"  # E normal to the plane of incidence
    TM = "TM"


@dataclass(frozen=True)
class MaterialSpec:
    name: str
    real_permittivity: float
    conductivity_coeff: float = 0.0
    conductivity_exponent: float = 0.0

    def __post_init__(self):
        if self.real_permittivity < 1.0:
            raise ValueError(f"{self.name}: real permittivity must be >= 1")
        if self.conductivity_coeff < 0.0:
            raise ValueError(f"{self.name}: conductivity coefficient must be >= 0")

    def conductivity(self, f: float) -> float:
        """Conductivity in S/m at frequency ``f`` (Hz)."""
        return self.conductivity_coeff * (f / 1e9) ** self.conductivity_exponent


CONCRETE = MaterialSpec("concrete", 5.24, 0.0462, 0.7822)
BRICK = MaterialSpec("brick", 3.91, 0.0238, 0.16)
VACUUM = MaterialSpec("vacuum", 1.0)

DEFAULT_MATERIALS = {m.name: m for m in (CONCRETE, BRICK, VACUUM)}


def complex_permittivity(mat: MaterialSpec, f: float) -> complex:
    if f <= 0:
        raise ValueError("frequency must be positive")
    f_ghz = f / 1e9
    return complex(mat.real_permittivity, -17.98 * mat.conductivity(f) / f_ghz)


def fresnel_reflection(eps: complex, theta_i: float, pol: Polarization) -> complex:
    """Amplitude reflection coefficient at an air / half-space interface."""
    c = math.cos(theta_i)
    s2 = math.sin(theta_i) ** 2
    root = cmath.sqrt(eps - s2)
    if pol is Polarization.TE:
        return (c - root) / (c + root)
    return (eps * c - root) / (eps * c + root)


def fresnel_amplitude(eps: complex, theta_i: float, pol: Optional[Polarization]) -> complex:
    """Like :func:`fresnel_reflection`, with ``pol=None`` meaning unpolarized.

    The unpolarized coefficient is the square root of the mean TE/TM power
    reflectance; it carries no phase.
    """
    if pol is not None:
        return fresnel_reflection(eps, theta_i, pol)
    te = abs(fresnel_reflection(eps, theta_i, Polarization.TE)) ** 2
    tm = abs(fresnel_reflection(eps, theta_i, Polarization.TM)) ** 2
    return complex(math.sqrt(0.5 * (te + tm)), 0.0)
