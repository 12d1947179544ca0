"""HyperSurface tile coefficients and anomalous-reflection supercell design.

Tile behaviour comes from two tabulated functions: leakage of an absorbing
tile versus incidence angle, and efficiency of a steering tile versus
(incidence, reflection) angle. Steering follows the grating relation
``sin(theta_r) - sin(theta_i) = m * lambda / (N_m * d_x)``.
"""

from __future__ import annotations

import bisect
import csv
import logging
import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .geom import RectPanel, Vec3

log = logging.getLogger(__name__)

C0 = 299_792_458.0
DEFAULT_DX = 1e-3
DATA_DIR_ENV = "HSF_SIM_DATA_DIR"
ABSORPTION_FILE = "absorption.csv"
REFLECTION_FILE = "reflection.csv"


class TableRangeError(ValueError):
    """Query outside the angular coverage of a coefficient table."""


class SteeringError(ValueError):
    pass


class Rounding(Enum):
    FLOOR = "floor"
    ROUND = "round"
    CEIL = "ceil"

    def apply(self, x: float) -> int:
        if self is Rounding.FLOOR:
            return math.floor(x)
        if self is Rounding.CEIL:
            return math.ceil(x)
        return math.floor(x + 0.5)


@dataclass(frozen=True)
class ReflectionRow:
    theta_i_deg: float
    theta_r_deg: float
    n_m: int
    alpha_ref_db: float
    reflected_power_pct: float


@dataclass(frozen=True)
class CoeffTable:
    absorption_rows: tuple[tuple[float, float], ...]
    reflection_rows: tuple[ReflectionRow, ...]
    _by_incidence: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        angles = [a for a, _ in self.absorption_rows]
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ValueError("absorption rows must be strictly increasing in theta_i")
        if any(v > 0 for _, v in self.absorption_rows):
            raise ValueError("absorption coefficients must be <= 0 dB")
        by_inc: dict[float, list[tuple[float, float]]] = {}
        for r in self.reflection_rows:
            if r.alpha_ref_db > 0:
                raise ValueError("reflection coefficients must be <= 0 dB")
            if not 0 < r.reflected_power_pct <= 100:
                raise ValueError("reflected power percentage must lie in (0, 100]")
            if r.n_m < 1:
                raise ValueError("N_m must be a positive integer")
            by_inc.setdefault(r.theta_i_deg, []).append((r.theta_r_deg, r.alpha_ref_db))
        for v in by_inc.values():
            v.sort()
        object.__setattr__(self, "_by_incidence", dict(sorted(by_inc.items())))

    def audit(self, tolerance_pct: float = 2.0) -> list[ReflectionRow]:
        """Rows whose dB and percentage columns disagree by more than ``tolerance_pct``."""
        bad = [
            r
            for r in self.reflection_rows
            if abs(100 * 10 ** (r.alpha_ref_db / 10) - r.reflected_power_pct) > tolerance_pct
        ]
        for r in bad:
            log.warning(
                "reflection row (%g, %g): %.3f dB is %.2f%%, table says %.2f%%",
                r.theta_i_deg, r.theta_r_deg, r.alpha_ref_db,
                100 * 10 ** (r.alpha_ref_db / 10), r.reflected_power_pct,
            )
        return bad


def _data_dir(data_dir: Union[str, Path, None]):
    if data_dir is None:
        data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir is not None:
        return Path(data_dir)
    return resources.files("hsfsim") / "data"


def load_coeff_table(data_dir: Union[str, Path, None] = None) -> CoeffTable:
    """Load the coefficient CSVs from ``data_dir``, $HSF_SIM_DATA_DIR or the packaged asset."""
    base = _data_dir(data_dir)
    with (base / ABSORPTION_FILE).open(newline="") as fh:
        absorption = tuple(
            (float(row["theta_i_deg"]), float(row["alpha_abs_db"])) for row in csv.DictReader(fh)
        )
    with (base / REFLECTION_FILE).open(newline="") as fh:
        reflection = tuple(
            ReflectionRow(
                float(row["theta_i_deg"]),
                float(row["theta_r_deg"]),
                int(row["n_m"]),
                float(row["alpha_ref_db"]),
                float(row["reflected_power_pct"]),
            )
            for row in csv.DictReader(fh)
        )
    return CoeffTable(absorption, reflection)


_DEFAULT_TABLE: Optional[CoeffTable] = None


def default_table() -> CoeffTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = load_coeff_table()
    return _DEFAULT_TABLE


def _interp(xs: list[float], ys: list[float], x: float) -> float:
    j = bisect.bisect_left(xs, x)
    # angles arrive through degree/radian round trips; snap to grid points
    for k in (j - 1, j):
        if 0 <= k < len(xs) and abs(xs[k] - x) <= 1e-9:
            return ys[k]
    x0, x1, y0, y1 = xs[j - 1], xs[j], ys[j - 1], ys[j]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def absorption_coeff(table: CoeffTable, theta_i: float, clamp: bool = False) -> float:
    """Leakage (dB) of an absorbing tile at incidence ``theta_i`` (radians).

    Linear in dB between tabulated angles. Outside the table this raises,
    unless ``clamp`` is set, in which case the nearest edge value is used.
    """
    xs = [a for a, _ in table.absorption_rows]
    ys = [v for _, v in table.absorption_rows]
    deg = math.degrees(theta_i)
    if not xs[0] - 1e-9 <= deg <= xs[-1] + 1e-9:
        if not clamp:
            raise TableRangeError(f"theta_i={deg:.3f} deg outside absorption table [{xs[0]}, {xs[-1]}]")
    deg = min(max(deg, xs[0]), xs[-1])
    return _interp(xs, ys, deg)


def _row_range(table: CoeffTable, ti: float) -> tuple[float, float]:
    return table._by_incidence[ti][0][0], table._by_incidence[ti][-1][0]


def _coverage(table: CoeffTable, ti_deg: float) -> Optional[tuple[float, float]]:
    """theta_r interval (deg) inside the convex hull of tabulated points at ``ti_deg``."""
    incs = list(table._by_incidence)
    if not incs[0] - 1e-9 <= ti_deg <= incs[-1] + 1e-9:
        return None
    # lower/upper hull of the row end points
    lows = [(ti, _row_range(table, ti)[0]) for ti in incs]
    highs = [(ti, _row_range(table, ti)[1]) for ti in incs]
    return _hull_envelope(lows, ti_deg, lower=True), _hull_envelope(highs, ti_deg, lower=False)


def _hull_envelope(points: list[tuple[float, float]], x: float, lower: bool) -> float:
    hull: list[tuple[float, float]] = []
    for p in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            cross = (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1)
            if (cross <= 0) if lower else (cross >= 0):
                hull.pop()
            else:
                break
        hull.append(p)
    xs = [h[0] for h in hull]
    ys = [h[1] for h in hull]
    if len(xs) == 1:
        return ys[0]
    x = min(max(x, xs[0]), xs[-1])
    return _interp(xs, ys, x)


def _row_value(table: CoeffTable, ti: float, tr: float) -> Optional[float]:
    row = table._by_incidence[ti]
    xs = [r for r, _ in row]
    if not xs[0] - 1e-9 <= tr <= xs[-1] + 1e-9:
        return None
    return _interp(xs, [v for _, v in row], min(max(tr, xs[0]), xs[-1]))


def reflection_coeff(table: CoeffTable, theta_i: float, theta_r: float, clamp: bool = False) -> float:
    """Steering efficiency (dB) for incidence ``theta_i`` and reflection ``theta_r`` (radians).

    Exact at tabulated pairs, bilinear in dB elsewhere. When only one of the
    two bracketing incidence rows covers ``theta_r`` the nearest covering row
    is used. Queries outside the convex hull of tabulated points raise
    :class:`TableRangeError` unless ``clamp`` projects them onto the hull.
    """
    ti = math.degrees(theta_i)
    tr = math.degrees(theta_r)
    incs = list(table._by_incidence)
    cov = _coverage(table, ti)
    inside = cov is not None and cov[0] - 1e-9 <= tr <= cov[1] + 1e-9
    if not inside:
        if not clamp:
            raise TableRangeError(f"(theta_i, theta_r)=({ti:.3f}, {tr:.3f}) deg outside reflection table")
        ti = min(max(ti, incs[0]), incs[-1])
        lo, hi = _coverage(table, ti)
        tr = min(max(tr, lo), hi)

    j = bisect.bisect_left(incs, ti)
    for k in (j - 1, j):
        if 0 <= k < len(incs) and abs(incs[k] - ti) <= 1e-9:
            return _row_value(table, incs[k], tr)
    t0, t1 = incs[j - 1], incs[j]
    v0 = _row_value(table, t0, tr)
    v1 = _row_value(table, t1, tr)
    if v0 is None:
        return v1
    if v1 is None:
        return v0
    return v0 + (v1 - v0) * (ti - t0) / (t1 - t0)


@dataclass(frozen=True)
class SupercellDesign:
    n_m: int
    m: int
    d_x: float
    wavelength: float
    theta_i: float
    theta_r_target: float
    theta_r_achieved: float
    phase_profile: tuple[tuple[float, float], ...]

    @property
    def period(self) -> float:
        return self.n_m * self.d_x

    @property
    def phase_slope(self) -> float:
        return self.m * 2 * math.pi / (self.n_m * self.d_x)


def achieved_angle(n_m: int, theta_i: float, m: int, wavelength: float, d_x: float) -> float:
    if n_m < 1:
        raise ValueError("N_m must be >= 1")
    s = math.sin(theta_i) + m * wavelength / (n_m * d_x)
    if abs(s) > 1.0:
        raise SteeringError(f"evanescent: sin(theta_r)={s:.4f} for N_m={n_m}")
    return math.asin(s)


def phase_profile(n_m: int, m: int, d_x: float, phi0: float = 0.0) -> tuple[tuple[float, float], ...]:
    slope = m * 2 * math.pi / (n_m * d_x)
    xs = [k * d_x for k in range(n_m)]
    return tuple((x, phi0 + slope * x) for x in xs)


def _n_m(ratio: float, policy: Rounding) -> int:
    return max(2, policy.apply(ratio))


def design_supercell(
    theta_i: float,
    theta_r: float,
    m: int = 1,
    wavelength: float = C0 / 60e9,
    d_x: float = DEFAULT_DX,
    policy: Rounding = Rounding.ROUND,
) -> SupercellDesign:
    if m == 0:
        raise ValueError("diffraction order m must be nonzero")
    if wavelength <= 0 or d_x <= 0:
        raise ValueError("wavelength and d_x must be positive")
    ds = math.sin(theta_r) - math.sin(theta_i)
    if abs(ds) < 1e-12:
        raise SteeringError("specular request: no supercell needed")
    ratio = m * wavelength / (d_x * ds)
    if ratio <= 0:
        raise SteeringError(f"diffraction order m={m} cannot steer towards the requested side")
    n_m = _n_m(ratio, policy)
    achieved = achieved_angle(n_m, theta_i, m, wavelength, d_x)
    return SupercellDesign(
        n_m=n_m,
        m=m,
        d_x=d_x,
        wavelength=wavelength,
        theta_i=theta_i,
        theta_r_target=theta_r,
        theta_r_achieved=achieved,
        phase_profile=phase_profile(n_m, m, d_x),
    )


# --- tile configuration -----------------------------------------------------


class TileMode(Enum):
    REFLECT = "reflect"
    ABSORB = "absorb"
    INERT = "inert"


@dataclass(frozen=True)
class TileConfig:
    """Tile function.

    For REFLECT the tile is programmed for one illumination: ``theta_i`` and
    ``azimuth_i`` locate the design source, ``theta_r`` and ``azimuth`` the
    steering target, both in the tile frame (polar angle from the normal,
    azimuth from ``edge_u`` towards ``edge_v``). The resulting phase gradient
    is fixed; waves from elsewhere are deflected by the same gradient.
    """

    mode: TileMode = TileMode.ABSORB
    theta_r: float = 0.0
    azimuth: float = 0.0
    collimate: bool = True
    theta_i: float = 0.0
    azimuth_i: float = 0.0

    def __post_init__(self):
        if self.mode is TileMode.REFLECT:
            if not 0.0 <= self.theta_r < math.pi / 2:
                raise ValueError("reflect target angle must lie in [0, pi/2)")
            if not 0.0 <= self.theta_i < math.pi / 2:
                raise ValueError("design incidence angle must lie in [0, pi/2)")

    @classmethod
    def reflect_towards(
        cls, panel: RectPanel, target: Vec3, source: Optional[Vec3] = None, collimate: bool = True
    ) -> "TileConfig":
        """Steer waves arriving from direction ``source`` towards direction ``target``.

        Both are directions pointing away from the tile; ``source=None``
        designs for normal incidence.
        """
        tr, ar = _tile_angles(panel, target)
        ti, ai = _tile_angles(panel, source) if source is not None else (0.0, 0.0)
        return cls(TileMode.REFLECT, tr, ar, collimate, ti, ai)

    def target_direction(self, panel: RectPanel) -> Vec3:
        return _from_tile_angles(panel, self.theta_r, self.azimuth)

    def source_direction(self, panel: RectPanel) -> Vec3:
        return _from_tile_angles(panel, self.theta_i, self.azimuth_i)


def _tile_angles(panel: RectPanel, direction: Vec3) -> tuple[float, float]:
    d = direction.unit()
    cos_t = d.dot(panel.normal)
    if cos_t <= 0:
        raise SteeringError("direction lies behind the tile")
    eu, ev = panel.edge_u.unit(), panel.edge_v.unit()
    return math.acos(min(1.0, cos_t)), math.atan2(d.dot(ev), d.dot(eu))


def _from_tile_angles(panel: RectPanel, theta: float, azimuth: float) -> Vec3:
    eu, ev = panel.edge_u.unit(), panel.edge_v.unit()
    st = math.sin(theta)
    return panel.normal * math.cos(theta) + eu * (st * math.cos(azimuth)) + ev * (st * math.sin(azimuth))


@dataclass(frozen=True)
class Steering:
    n_m: Optional[int]  # None: uniform phase, specular reflection
    gradient: Vec3  # tangential wavevector kick, in units of k0
    direction: Vec3
    theta_i: float
    theta_r: float


def _tangential(v: Vec3, n: Vec3) -> Vec3:
    return v - n * v.dot(n)


def supercell_gradient(
    incoming: Vec3,
    target: Vec3,
    panel: RectPanel,
    wavelength: float,
    d_x: float = DEFAULT_DX,
    policy: Rounding = Rounding.ROUND,
    m: int = 1,
) -> tuple[Optional[int], Vec3]:
    """Integer supercell size and the tangential kick (in units of k0) it applies.

    The phase gradient is laid along the tangential momentum mismatch between
    ``incoming`` (propagation direction) and ``target``; in the plane of
    incidence this is exactly :func:`design_supercell`.
    """
    n = panel.normal
    u_in = incoming.unit()
    u_t = target.unit()
    if u_in.dot(n) >= 0:
        raise SteeringError("incoming wave hits the back of the tile")
    if u_t.dot(n) <= 0:
        raise SteeringError("target lies behind the tile")
    delta = _tangential(u_t, n) - _tangential(u_in, n)
    g = delta.norm()
    if g < 1e-9:
        return None, Vec3(0.0, 0.0, 0.0)
    n_m = _n_m(abs(m) * wavelength / (d_x * g), policy)
    return n_m, delta * (abs(m) * wavelength / (n_m * d_x * g))


def deflect(incoming: Vec3, gradient: Vec3, panel: RectPanel) -> Steering:
    """Outgoing direction for a wave meeting a tile with a fixed phase gradient."""
    n = panel.normal
    u_in = incoming.unit()
    if u_in.dot(n) >= 0:
        raise SteeringError("incoming wave hits the back of the tile")
    t_out = _tangential(u_in, n) + gradient
    s2 = t_out.dot(t_out)
    if s2 > 1.0:
        raise SteeringError(f"evanescent: |sin(theta_r)|={math.sqrt(s2):.4f}")
    out = t_out + n * math.sqrt(1.0 - s2)
    theta_i = math.acos(min(1.0, -u_in.dot(n)))
    return Steering(None, gradient, out, theta_i, math.asin(math.sqrt(s2)))


def steer(
    incoming: Vec3,
    target: Vec3,
    panel: RectPanel,
    wavelength: float,
    d_x: float = DEFAULT_DX,
    policy: Rounding = Rounding.ROUND,
    m: int = 1,
) -> Steering:
    """Design a supercell for ``incoming`` -> ``target`` and return what it realises."""
    n_m, grad = supercell_gradient(incoming, target, panel, wavelength, d_x, policy, m)
    return replace(deflect(incoming, grad, panel), n_m=n_m)


def realise(
    config: TileConfig,
    panel: RectPanel,
    incoming: Vec3,
    wavelength: float,
    d_x: float = DEFAULT_DX,
    policy: Rounding = Rounding.ROUND,
) -> Steering:
    """Beam produced by a reflect-mode tile for an actual incoming direction."""
    n_m, grad = supercell_gradient(
        -config.source_direction(panel), config.target_direction(panel), panel, wavelength, d_x, policy
    )
    return replace(deflect(incoming, grad, panel), n_m=n_m)
