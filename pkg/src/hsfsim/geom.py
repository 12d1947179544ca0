"""3D vector algebra, rectangular panels and image-method reflection paths.

All types are immutable; every function is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

EPS = 1e-9


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def __add__(self, o: "Vec3") -> "Vec3":  # type: ignore[override]
        return Vec3(self.x + o.x, self.y + o.y, self.z + o.z)

    def __sub__(self, o: "Vec3") -> "Vec3":
        return Vec3(self.x - o.x, self.y - o.y, self.z - o.z)

    def __mul__(self, s: float) -> "Vec3":  # type: ignore[override]
        return Vec3(self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__  # type: ignore[assignment]

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def dot(self, o: "Vec3") -> float:
        return self.x * o.x + self.y * o.y + self.z * o.z

    def cross(self, o: "Vec3") -> "Vec3":
        return Vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def unit(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero-length vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def dist(self, o: "Vec3") -> float:
        return (self - o).norm()


def vec(v: Sequence[float]) -> Vec3:
    x, y, z = v
    return Vec3(float(x), float(y), float(z))


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class RectPanel:
    """Rectangle ``origin + s*edge_u + t*edge_v`` for s, t in [0, 1].

    The normal is ``edge_u x edge_v`` normalized; the panel reflects on that
    side only but blocks rays from both sides.
    """

    origin: Vec3
    edge_u: Vec3
    edge_v: Vec3
    normal: Vec3 = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "origin", vec(self.origin))
        object.__setattr__(self, "edge_u", vec(self.edge_u))
        object.__setattr__(self, "edge_v", vec(self.edge_v))
        lu, lv = self.edge_u.norm(), self.edge_v.norm()
        if lu < EPS or lv < EPS:
            raise GeometryError("degenerate panel: zero-length edge")
        if abs(self.edge_u.dot(self.edge_v)) > EPS * max(1.0, lu * lv):
            raise GeometryError("panel edges are not orthogonal")
        object.__setattr__(self, "normal", self.edge_u.cross(self.edge_v).unit())

    @property
    def area(self) -> float:
        return self.edge_u.norm() * self.edge_v.norm()

    @property
    def center(self) -> Vec3:
        return self.origin + self.edge_u * 0.5 + self.edge_v * 0.5

    def signed_distance(self, p: Vec3) -> float:
        return (p - self.origin).dot(self.normal)

    def local_coords(self, p: Vec3) -> tuple[float, float]:
        """Fractional (s, t) coordinates of the projection of ``p``."""
        d = p - self.origin
        return (
            d.dot(self.edge_u) / self.edge_u.dot(self.edge_u),
            d.dot(self.edge_v) / self.edge_v.dot(self.edge_v),
        )

    def contains(self, p: Vec3, tol: float = 1e-9) -> bool:
        """True if ``p`` lies on the plane and inside the rectangle (edges included)."""
        if abs(self.signed_distance(p)) > tol:
            return False
        s, t = self.local_coords(p)
        su = tol / self.edge_u.norm()
        sv = tol / self.edge_v.norm()
        return -su <= s <= 1 + su and -sv <= t <= 1 + sv

    def corners(self) -> tuple[Vec3, Vec3, Vec3, Vec3]:
        o, u, v = self.origin, self.edge_u, self.edge_v
        return (o, o + u, o + u + v, o + v)


@dataclass(frozen=True)
class GeometricPath:
    vertices: tuple[Vec3, ...]
    incidence_angles: tuple[float, ...] = ()
    panel_ids: tuple[str, ...] = ()

    @property
    def segment_lengths(self) -> tuple[float, ...]:
        vs = self.vertices
        return tuple(vs[i].dist(vs[i + 1]) for i in range(len(vs) - 1))

    @property
    def total_length(self) -> float:
        return math.fsum(self.segment_lengths)

    @property
    def bounce_count(self) -> int:
        return len(self.vertices) - 2


def mirror_point(p: Vec3, panel: RectPanel) -> Vec3:
    """Reflect ``p`` across the infinite plane containing ``panel``."""
    return p - panel.normal * (2.0 * panel.signed_distance(p))


def incidence_angle(direction: Vec3, panel: RectPanel) -> float:
    """Angle in [0, pi/2] between a propagation direction and the panel normal."""
    n = direction.norm()
    if n == 0.0:
        raise GeometryError("zero-length direction")
    c = abs(direction.dot(panel.normal)) / n
    return math.acos(min(1.0, c))


def _segment_plane_hit(a: Vec3, b: Vec3, panel: RectPanel) -> Optional[tuple[float, Vec3]]:
    da = panel.signed_distance(a)
    db = panel.signed_distance(b)
    denom = da - db
    if denom == 0.0:
        return None
    t = da / denom
    return t, a + (b - a) * t


def trace_image_path(
    tx: Vec3, rx: Vec3, panels: Sequence[RectPanel], panel_ids: Sequence[str] = ()
) -> Optional[GeometricPath]:
    """Specular path from ``tx`` to ``rx`` bouncing off ``panels`` in order.

    Returns None when any bounce point falls outside its rectangle or when a
    leg approaches a panel from its back side.
    """
    tx, rx = vec(tx), vec(rx)
    images = [tx]
    for panel in panels:
        images.append(mirror_point(images[-1], panel))

    points: list[Vec3] = []
    target = rx
    for k in range(len(panels) - 1, -1, -1):
        panel = panels[k]
        if panel.signed_distance(target) <= EPS:
            return None
        hit = _segment_plane_hit(images[k + 1], target, panel)
        if hit is None:
            return None
        t, p = hit
        if not (0.0 < t < 1.0) or not panel.contains(p, tol=1e-9):
            return None
        points.append(p)
        target = p
    points.reverse()
    vertices = (tx, *points, rx)

    angles = []
    for k, panel in enumerate(panels):
        if panel.signed_distance(vertices[k]) <= EPS:
            return None
        angles.append(incidence_angle(vertices[k + 1] - vertices[k], panel))
    ids = tuple(panel_ids) if panel_ids else tuple(str(i) for i in range(len(panels)))
    return GeometricPath(vertices=vertices, incidence_angles=tuple(angles), panel_ids=ids)


def segment_hits_panel(a: Vec3, b: Vec3, panel: RectPanel, eps: float = EPS) -> bool:
    """True if the open segment (a, b) crosses the panel rectangle."""
    da = panel.signed_distance(a)
    db = panel.signed_distance(b)
    if (da > eps and db > eps) or (da < -eps and db < -eps):
        return False
    denom = da - db
    if abs(denom) <= eps:
        return False  # parallel, or lying in the plane
    t = da / denom
    if t <= eps or t >= 1.0 - eps:
        return False
    return panel.contains(a + (b - a) * t, tol=1e-9)


def is_occluded(a: Vec3, b: Vec3, blockers: Sequence[RectPanel]) -> bool:
    return any(segment_hits_panel(a, b, p) for p in blockers)


def ray_panel_hit(origin: Vec3, direction: Vec3, panel: RectPanel) -> Optional[float]:
    """Distance along a unit ``direction`` at which the ray meets ``panel``, or None."""
    denom = direction.dot(panel.normal)
    if abs(denom) < 1e-12:
        return None
    t = -panel.signed_distance(origin) / denom
    if t <= EPS:
        return None
    if not panel.contains(origin + direction * t, tol=1e-9):
        return None
    return t


def angle_between(a: Vec3, b: Vec3) -> float:
    c = a.dot(b) / (a.norm() * b.norm())
    return math.acos(max(-1.0, min(1.0, c)))


def arrival_angles(rx: Vec3, previous: Vec3) -> tuple[float, float]:
    """Elevation (above horizontal) and azimuth of the direction a ray arrives from."""
    d = previous - rx
    return math.atan2(d.z, math.hypot(d.x, d.y)), math.atan2(d.y, d.x)
