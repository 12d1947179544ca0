"""Multipath channel response of an HSF-coated room.

A response is a list of discrete arrivals (complex gain, delay, angle of
arrival). Three families contribute: the direct path, paths steered by
tiles in reflect mode, and the residual specular leakage of absorbing
tiles. Plain (uncoated) surfaces add Fresnel-weighted specular paths.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Optional, Sequence, TextIO

from . import geom
from .geom import GeometricPath, RectPanel, Vec3
from .hsf import (
    C0,
    DEFAULT_DX,
    CoeffTable,
    Rounding,
    SteeringError,
    TileConfig,
    TileMode,
    absorption_coeff,
    default_table,
    realise,
    reflection_coeff,
)
from .materials import Polarization

if TYPE_CHECKING:
    from .scenario import Scene

NEG_INF = float("-inf")


class PathKind(Enum):
    LOS = "los"
    HSF_REFLECTED = "hsf_reflected"
    HSF_LEAKAGE = "hsf_leakage"
    PLAIN_REFLECTED = "plain_reflected"


class PowerMode(Enum):
    COHERENT = "coherent"
    NONCOHERENT = "noncoherent"


@dataclass(frozen=True)
class PathComponent:
    kind: PathKind
    complex_gain: complex
    delay: float
    aoa_elevation: float
    aoa_azimuth: float
    bounce_count: int
    via_ids: tuple[str, ...] = ()
    length: float = 0.0

    @property
    def power(self) -> float:
        return abs(self.complex_gain) ** 2


@dataclass(frozen=True)
class ChannelResponse:
    components: tuple[PathComponent, ...]
    f_c: float
    tx_id: str = "tx"
    rx_id: str = "rx"

    def __post_init__(self):
        comps = tuple(sorted(self.components, key=lambda c: (c.delay, c.kind.value, c.via_ids)))
        keys = [(c.kind, c.via_ids) for c in comps]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate path components in channel response")
        object.__setattr__(self, "components", comps)

    def __len__(self) -> int:
        return len(self.components)

    def of_kind(self, kind: PathKind) -> list[PathComponent]:
        return [c for c in self.components if c.kind is kind]


@dataclass(frozen=True)
class ChannelConfig:
    """Knobs for :func:`assemble_cir`.

    ``baseline`` ignores tiles and treats every wall as its plain material.
    ``clamp_tables`` projects out-of-table angles onto the nearest tabulated
    coverage instead of raising.
    """

    baseline: bool = False
    max_order: int = 4
    polarization: Optional[Polarization] = None
    beam_tolerance_deg: float = 2.0
    spreading_after_collimation: bool = False
    ideal_hsf: bool = False
    perfect_absorption: bool = False
    clamp_tables: bool = True
    d_x: float = DEFAULT_DX
    rounding: Rounding = Rounding.ROUND
    max_hsf_bounces: int = 2


def spreading_gain(f_c: float, d_total: float) -> float:
    """Free-space amplitude ``c / (4 pi f_c d)``."""
    if f_c <= 0 or d_total <= 0:
        raise ValueError("frequency and distance must be positive")
    return C0 / (4 * math.pi * f_c * d_total)


def path_delay(d_total: float) -> float:
    if d_total < 0:
        raise ValueError("path length must be nonnegative")
    return d_total / C0


def _component(
    kind: PathKind,
    vertices: Sequence[Vec3],
    magnitude: complex,
    f_c: float,
    via_ids: Sequence[str],
) -> PathComponent:
    length = math.fsum(vertices[i].dist(vertices[i + 1]) for i in range(len(vertices) - 1))
    tau = path_delay(length)
    el, az = geom.arrival_angles(vertices[-1], vertices[-2])
    return PathComponent(
        kind=kind,
        complex_gain=magnitude * cmath.exp(-2j * math.pi * f_c * tau),
        delay=tau,
        aoa_elevation=el,
        aoa_azimuth=az,
        bounce_count=len(vertices) - 2,
        via_ids=tuple(via_ids),
        length=length,
    )


def los_component(
    tx: Vec3, rx: Vec3, f_c: float, blockers: Sequence[RectPanel] = ()
) -> Optional[PathComponent]:
    if tx == rx:
        raise ValueError("transmitter and receiver coincide")
    if geom.is_occluded(tx, rx, blockers):
        return None
    return _component(PathKind.LOS, (tx, rx), spreading_gain(f_c, tx.dist(rx)), f_c, ())


def _exit_angle(path: GeometricPath, k: int, panel: RectPanel) -> float:
    v = path.vertices
    return geom.incidence_angle(v[k + 2] - v[k + 1], panel)


def hsf_reflect_component(
    path: GeometricPath,
    tiles: Sequence[TileConfig],
    panels: Sequence[RectPanel],
    table: CoeffTable,
    f_c: float,
    *,
    tile_ids: Sequence[str] = (),
    ideal: bool = False,
    spreading_after_collimation: bool = False,
    clamp: bool = False,
) -> PathComponent:
    """Arrival steered through ``tiles`` along ``path`` (tile centres as bounce points).

    With collimation on the first tile, spreading applies to the first leg
    only (plus the last leg if ``spreading_after_collimation``); delays always
    use the full geometric length.
    """
    if len(tiles) != path.bounce_count or len(panels) != path.bounce_count:
        raise ValueError("one tile per bounce required")
    coeff = 1.0
    for k, (cfg, panel) in enumerate(zip(tiles, panels)):
        if cfg.mode is not TileMode.REFLECT:
            raise ValueError(f"tile {k} is in {cfg.mode.value} mode, expected reflect")
        if ideal:
            continue
        theta_i = geom.incidence_angle(path.vertices[k + 1] - path.vertices[k], panel)
        theta_r = _exit_angle(path, k, panel)
        coeff *= 10 ** (reflection_coeff(table, theta_i, theta_r, clamp=clamp) / 20)

    segs = path.segment_lengths
    if tiles and tiles[0].collimate:
        d = segs[0] + (segs[-1] if spreading_after_collimation else 0.0)
    else:
        d = path.total_length
    return _component(
        PathKind.HSF_REFLECTED,
        path.vertices,
        spreading_gain(f_c, d) * coeff,
        f_c,
        tile_ids or path.panel_ids,
    )


def hsf_leakage_component(
    path: GeometricPath,
    table: CoeffTable,
    f_c: float,
    *,
    perfect_absorption: bool = False,
    clamp: bool = False,
) -> Optional[PathComponent]:
    """Specular leakage off a single absorbing tile; None for a perfect absorber."""
    if path.bounce_count != 1:
        raise ValueError("leakage paths have exactly one bounce")
    if perfect_absorption:
        return None
    alpha = absorption_coeff(table, path.incidence_angles[0], clamp=clamp)
    return _component(
        PathKind.HSF_LEAKAGE,
        path.vertices,
        spreading_gain(f_c, path.total_length) * 10 ** (alpha / 20),
        f_c,
        path.panel_ids,
    )


def received_power(cr: ChannelResponse, p_tx: float, mode: PowerMode = PowerMode.NONCOHERENT) -> float:
    """Received power in dBmW; ``-inf`` for an empty response."""
    if not cr.components:
        return NEG_INF
    if mode is PowerMode.COHERENT:
        total = abs(sum(c.complex_gain for c in cr.components)) ** 2
    else:
        total = math.fsum(c.power for c in cr.components)
    if total == 0.0:
        return NEG_INF
    return p_tx + 10 * math.log10(total)


def gain_percent(p_hsf: float, p_plain: float) -> float:
    """Relative improvement computed on the dBmW numbers themselves."""
    if p_plain == 0:
        raise ValueError("plain power of 0 dBmW gives an undefined ratio")
    return 100.0 * (p_hsf - p_plain) / p_plain


def gain_percent_linear(p_hsf: float, p_plain: float) -> float:
    """Relative improvement in linear power (mW)."""
    return 100.0 * (10 ** ((p_hsf - p_plain) / 10) - 1.0)


def power_delay_profile(cr: ChannelResponse, bin_width: float) -> list[tuple[float, float]]:
    """Nonzero delay bins as ``(bin start [s], power [dB])``."""
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    bins: dict[int, list[float]] = defaultdict(list)
    for c in cr.components:
        bins[math.floor(c.delay / bin_width + 1e-9)].append(c.power)
    out = []
    for k in sorted(bins):
        p = math.fsum(bins[k])
        if p > 0:
            out.append((k * bin_width, 10 * math.log10(p)))
    return out


CIR_COLUMNS = (
    "path_id", "kind", "delay_ns", "gain_db", "phase_rad",
    "aoa_el_deg", "aoa_az_deg", "bounce_count", "via_ids",
)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def cir_rows(components: Iterable[PathComponent]) -> list[list[str]]:
    rows = []
    for i, c in enumerate(components):
        mag = abs(c.complex_gain)
        rows.append([
            str(i),
            c.kind.value,
            _fmt(c.delay * 1e9),
            _fmt(20 * math.log10(mag)) if mag > 0 else "-inf",
            _fmt(cmath.phase(c.complex_gain)),
            _fmt(math.degrees(c.aoa_elevation)),
            _fmt(math.degrees(c.aoa_azimuth)),
            str(c.bounce_count),
            ";".join(c.via_ids),
        ])
    return rows


def write_cir_csv(components: Iterable[PathComponent], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CIR_COLUMNS)
    w.writerows(cir_rows(components))


def cir_csv_text(components: Iterable[PathComponent]) -> str:
    buf = io.StringIO()
    write_cir_csv(components, buf)
    return buf.getvalue()


# --- assembly ---------------------------------------------------------------


def _reaches(origin: Vec3, direction: Vec3, target: Vec3, tol: float) -> bool:
    return geom.angle_between(direction, target - origin) <= tol


def realised_direction(tile, source: Vec3, wavelength: float, config: ChannelConfig) -> Optional[Vec3]:
    """Beam direction a reflect-mode tile produces for a wave arriving from ``source``."""
    try:
        return realise(
            tile.config, tile.panel, tile.panel.center - source, wavelength, config.d_x, config.rounding
        ).direction
    except SteeringError:
        return None


def beam_delivers(tile, out: Vec3, rx: Vec3, blockers, config: ChannelConfig) -> bool:
    c = tile.panel.center
    return (
        tile.panel.signed_distance(rx) > geom.EPS
        and _reaches(c, out, rx, math.radians(config.beam_tolerance_deg))
        and not geom.is_occluded(c, rx, blockers)
    )


def beam_lands_on(tile, out: Vec3, target_tile, blockers) -> bool:
    """True if the beam from ``tile`` meets ``target_tile`` before any wall."""
    c = tile.panel.center
    d = geom.ray_panel_hit(c, out, target_tile.panel)
    if d is None:
        return False
    walls = [h for h in (geom.ray_panel_hit(c, out, p) for p in blockers) if h is not None]
    if walls and d > min(walls) + 1e-6:
        return False
    return not geom.is_occluded(c, target_tile.panel.center, blockers)


def _illuminated(tile, source: Vec3, blockers) -> bool:
    return tile.panel.signed_distance(source) > geom.EPS and not geom.is_occluded(
        source, tile.panel.center, blockers
    )


def chain_delivers(chain, tx: Vec3, rx: Vec3, blockers, wavelength: float, config: ChannelConfig) -> bool:
    """Whether the configured tiles in ``chain`` carry the beam from tx to rx."""
    if not _illuminated(chain[0], tx, blockers):
        return False
    source = tx
    for k, tile in enumerate(chain):
        out = realised_direction(tile, source, wavelength, config)
        if out is None:
            return False
        if k + 1 < len(chain):
            if not beam_lands_on(tile, out, chain[k + 1], blockers):
                return False
        elif not beam_delivers(tile, out, rx, blockers, config):
            return False
        source = tile.panel.center
    return True


def _steered_paths(scene: "Scene", tx: Vec3, rx: Vec3, wavelength: float, config: ChannelConfig):
    """Yield tile chains whose realised beams carry tx to rx."""
    blockers = scene.blockers
    reflectors = [t for t in scene.tiles if t.config.mode is TileMode.REFLECT]
    for t1 in reflectors:
        if not _illuminated(t1, tx, blockers):
            continue
        out1 = realised_direction(t1, tx, wavelength, config)
        if out1 is None:
            continue
        if beam_delivers(t1, out1, rx, blockers, config):
            yield (t1,)
        if config.max_hsf_bounces < 2:
            continue
        for t2 in reflectors:
            if t2 is t1 or not beam_lands_on(t1, out1, t2, blockers):
                continue
            out2 = realised_direction(t2, t1.panel.center, wavelength, config)
            if out2 is not None and beam_delivers(t2, out2, rx, blockers, config):
                yield (t1, t2)


def chain_component(
    scene: "Scene", tx: Vec3, rx: Vec3, chain, table: CoeffTable, f_c: float, config: ChannelConfig
) -> PathComponent:
    vertices = (tx, *(t.panel.center for t in chain), rx)
    path = GeometricPath(vertices=vertices, panel_ids=tuple(t.id for t in chain))
    return hsf_reflect_component(
        path,
        [t.config for t in chain],
        [t.panel for t in chain],
        table,
        f_c,
        ideal=config.ideal_hsf,
        spreading_after_collimation=config.spreading_after_collimation,
        clamp=config.clamp_tables,
    )


def leakage_components(
    scene: "Scene", tx: Vec3, rx: Vec3, table: CoeffTable, f_c: float, config: ChannelConfig
) -> list[PathComponent]:
    if config.perfect_absorption:
        return []
    blockers = scene.blockers
    out = []
    for tile in scene.tiles:
        if tile.config.mode is not TileMode.ABSORB:
            continue
        path = geom.trace_image_path(tx, rx, [tile.panel], [tile.id])
        if path is None:
            continue
        v = path.vertices
        if geom.is_occluded(v[0], v[1], blockers) or geom.is_occluded(v[1], v[2], blockers):
            continue
        comp = hsf_leakage_component(path, table, f_c, clamp=config.clamp_tables)
        if comp is not None:
            out.append(comp)
    return out


def assemble_cir(
    scene: "Scene",
    tx: Vec3,
    rx: Vec3,
    f_c: Optional[float] = None,
    config: ChannelConfig = ChannelConfig(),
    table: Optional[CoeffTable] = None,
    tx_id: str = "tx",
    rx_id: str = "rx",
) -> ChannelResponse:
    """Full channel response for one link.

    Direct path, plain specular paths (every wall in baseline mode, only
    uncoated surfaces otherwise), steered tile chains that land within
    ``beam_tolerance_deg`` of the receiver, and single-bounce leakage of
    absorbing tiles.
    """
    from . import raytracer

    f_c = scene.f_c if f_c is None else f_c
    table = default_table() if table is None else table
    if config.baseline:
        scene = scene.as_plain()
    comps: list[PathComponent] = []
    los = los_component(tx, rx, f_c, scene.blockers)
    if los is not None:
        comps.append(los)

    budget = raytracer.TraceBudget(max_order=config.max_order)
    for path in raytracer.enumerate_paths(scene, tx, rx, budget):
        if path.bounce_count == 0:
            continue
        comps.append(raytracer.plain_path_component(path, scene, f_c, config.polarization))

    if not config.baseline:
        wavelength = C0 / f_c
        for chain in _steered_paths(scene, tx, rx, wavelength, config):
            comps.append(chain_component(scene, tx, rx, chain, table, f_c, config))
        comps.extend(leakage_components(scene, tx, rx, table, f_c, config))

    return ChannelResponse(tuple(comps), f_c, tx_id, rx_id)
