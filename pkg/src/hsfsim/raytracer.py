"""Image-method ray tracer for uncoated rooms (the plain-wall baseline)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

from . import geom
from .channel import (
    ChannelResponse,
    PathComponent,
    PathKind,
    PowerMode,
    _component,
    received_power,
    spreading_gain,
)
from .geom import GeometricPath, Vec3
from .materials import Polarization, complex_permittivity, fresnel_amplitude

if TYPE_CHECKING:
    from .scenario import Scene, Wall


@dataclass(frozen=True)
class TraceBudget:
    max_order: int = 4
    min_path_gain_db: float = float("-inf")

    def __post_init__(self):
        if self.max_order < 0:
            raise ValueError("max_order must be >= 0")


def enumerate_paths(
    scene: "Scene",
    tx: Vec3,
    rx: Vec3,
    budget: TraceBudget = TraceBudget(),
    reflectors: Optional[Sequence["Wall"]] = None,
) -> list[GeometricPath]:
    """All unoccluded specular paths with up to ``budget.max_order`` bounces.

    Sequences never repeat a wall consecutively. Output is ordered by bounce
    count, then lexicographically by wall id.
    """
    if reflectors is None:
        reflectors = scene.plain_walls
    walls = sorted(reflectors, key=lambda w: w.id)
    blockers = scene.blockers
    found: list[GeometricPath] = []

    def visible(path: GeometricPath) -> bool:
        v = path.vertices
        return not any(geom.is_occluded(v[i], v[i + 1], blockers) for i in range(len(v) - 1))

    for order in range(budget.max_order + 1):
        # depth-first over wall sequences, carrying the mirrored source
        def walk(seq: list, image: Vec3):
            if len(seq) == order:
                path = geom.trace_image_path(tx, rx, [w.panel for w in seq], [w.id for w in seq])
                if path is not None and visible(path):
                    found.append(path)
                return
            for w in walls:
                if seq and w is seq[-1]:
                    continue
                # the virtual source must sit in front of the next mirror
                if w.panel.signed_distance(image) <= geom.EPS:
                    continue
                seq.append(w)
                walk(seq, geom.mirror_point(image, w.panel))
                seq.pop()

        walk([], tx)
    return found


def plain_path_component(
    path: GeometricPath,
    scene: "Scene",
    f_c: float,
    pol: Optional[Polarization] = None,
) -> PathComponent:
    """Spreading over the full unfolded length times the Fresnel product."""
    coeff: complex = 1.0
    for wall_id, theta in zip(path.panel_ids, path.incidence_angles):
        wall = scene.wall(wall_id)
        if wall.is_hsf:
            raise ValueError(f"wall {wall_id} is HSF-coated; not a plain reflector")
        eps = complex_permittivity(scene.material(wall.material), f_c)
        coeff *= fresnel_amplitude(eps, theta, pol)
    kind = PathKind.LOS if path.bounce_count == 0 else PathKind.PLAIN_REFLECTED
    return _component(
        kind, path.vertices, spreading_gain(f_c, path.total_length) * coeff, f_c, path.panel_ids
    )


def plain_components(
    scene: "Scene",
    tx: Vec3,
    rx: Vec3,
    f_c: Optional[float] = None,
    budget: TraceBudget = TraceBudget(),
    pol: Optional[Polarization] = None,
) -> list[PathComponent]:
    """Components of the baseline (every wall plain) for one link."""
    plain = scene.as_plain()
    f_c = scene.f_c if f_c is None else f_c
    out = []
    for path in enumerate_paths(plain, tx, rx, budget):
        c = plain_path_component(path, plain, f_c, pol)
        if 20 * math.log10(abs(c.complex_gain)) >= budget.min_path_gain_db:
            out.append(c)
    return out


def plain_received_power(
    scene: "Scene",
    tx: Vec3,
    rx: Vec3,
    p_tx: Optional[float] = None,
    f_c: Optional[float] = None,
    budget: TraceBudget = TraceBudget(),
    mode: PowerMode = PowerMode.NONCOHERENT,
    pol: Optional[Polarization] = None,
) -> float:
    f_c = scene.f_c if f_c is None else f_c
    p_tx = scene.p_tx if p_tx is None else p_tx
    cr = ChannelResponse(tuple(plain_components(scene, tx, rx, f_c, budget, pol)), f_c)
    return received_power(cr, p_tx, mode)
