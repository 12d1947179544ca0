"""Scene model, JSON scene files, the two-room 60 GHz scene and tile selection.

Scene file layout (JSON)::

    {
      "units": {"length": "m", "frequency": "GHz", "power": "dBmW"},
      "frequency_ghz": 60, "power_dbmw": 100,
      "tx": [x, y, z], "rx": [[x, y, z], ...],
      "materials": {"concrete": {"real_permittivity": 5.24, ...}},   # optional
      "walls": [{"id": ..., "corner": [...], "edge_u": [...], "edge_v": [...],
                 "role": "plain_wall" | "floor" | "ceiling" | "hsf_wall",
                 "material": "concrete", "hsf": {"tile_size_m": 1.0}}],
      "default_tile_mode": "absorb",                                  # optional
      "tile_overrides": [{"id": ..., "mode": "reflect",
                          "theta_r_deg": ..., "azimuth_deg": ...,
                          "theta_i_deg": ..., "azimuth_i_deg": ..., "collimate": true}]
    }

Wall normals (``edge_u x edge_v``) point into the room. HSF walls are cut
into tiles on a grid anchored at the wall corner; the last row and column
are trimmed to fit. Tile ids are the tile centre coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

from . import geom
from .channel import (
    ChannelConfig,
    ChannelResponse,
    PathComponent,
    PathKind,
    assemble_cir,
    chain_component,
    chain_delivers,
    leakage_components,
    los_component,
)
from .geom import GeometryError, RectPanel, Vec3, vec
from .hsf import C0, CoeffTable, SteeringError, TileConfig, TileMode, default_table
from .materials import DEFAULT_MATERIALS, MaterialSpec

UNITS = {"length": "m", "frequency": "GHz", "power": "dBmW"}


class SceneError(ValueError):
    """Invalid scene; ``location`` points at the offending entry."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class SchemaError(SceneError):
    pass


class TessellationError(SceneError):
    pass


class DuplicateIdError(SceneError):
    pass


class PlacementError(SceneError):
    pass


class Role(Enum):
    PLAIN_WALL = "plain_wall"
    FLOOR = "floor"
    CEILING = "ceiling"
    HSF_WALL = "hsf_wall"


@dataclass(frozen=True)
class Wall:
    id: str
    panel: RectPanel
    role: Role = Role.PLAIN_WALL
    material: str = "concrete"
    tile_size: Optional[float] = None

    @property
    def is_hsf(self) -> bool:
        return self.role is Role.HSF_WALL


@dataclass(frozen=True)
class Tile:
    id: str
    panel: RectPanel
    wall_id: str
    config: TileConfig = TileConfig()


def tile_id(center: Sequence[float]) -> str:
    return ",".join(f"{round(c, 6):g}" for c in center)


def tessellate(wall: Wall, default: TileConfig = TileConfig()) -> list[Tile]:
    """Cut an HSF wall into ``tile_size`` squares; edge tiles are trimmed."""
    size = wall.tile_size
    if size is None or size <= 0:
        raise TessellationError("HSF wall needs a positive tile size", f"walls[{wall.id}]")
    p = wall.panel
    lu, lv = p.edge_u.norm(), p.edge_v.norm()
    eu, ev = p.edge_u.unit(), p.edge_v.unit()

    def cuts(length):
        n = math.ceil(length / size - 1e-9)
        return [(k * size, min((k + 1) * size, length)) for k in range(n)]

    tiles = []
    for a0, a1 in cuts(lu):
        for b0, b1 in cuts(lv):
            panel = RectPanel(p.origin + eu * a0 + ev * b0, eu * (a1 - a0), ev * (b1 - b0))
            tiles.append(Tile(tile_id(panel.center), panel, wall.id, default))
    return tiles


@dataclass(frozen=True)
class Scene:
    walls: tuple[Wall, ...]
    tiles: tuple[Tile, ...]
    tx: Vec3
    rx_list: tuple[Vec3, ...]
    f_c: float = 60e9
    p_tx: float = 100.0
    materials: tuple[MaterialSpec, ...] = tuple(DEFAULT_MATERIALS.values())
    _walls_by_id: dict = field(init=False, repr=False, compare=False)
    _tiles_by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_walls_by_id", {w.id: w for w in self.walls})
        object.__setattr__(self, "_tiles_by_id", {t.id: t for t in self.tiles})

    @property
    def blockers(self) -> list[RectPanel]:
        return [w.panel for w in self.walls]

    @property
    def plain_walls(self) -> list[Wall]:
        return [w for w in self.walls if not w.is_hsf]

    def wall(self, wall_id: str) -> Wall:
        return self._walls_by_id[wall_id]

    def tile(self, tid: str) -> Tile:
        return self._tiles_by_id[tid]

    def material(self, name: str) -> MaterialSpec:
        for m in self.materials:
            if m.name == name:
                return m
        raise KeyError(name)

    @property
    def wavelength(self) -> float:
        return C0 / self.f_c

    def bounds(self) -> tuple[Vec3, Vec3]:
        pts = [c for w in self.walls for c in w.panel.corners()]
        return (
            Vec3(min(p.x for p in pts), min(p.y for p in pts), min(p.z for p in pts)),
            Vec3(max(p.x for p in pts), max(p.y for p in pts), max(p.z for p in pts)),
        )

    def as_plain(self) -> "Scene":
        """The same room with coatings removed: every wall reflects as its material."""
        walls = tuple(
            replace(w, role=Role.PLAIN_WALL, tile_size=None) if w.is_hsf else w for w in self.walls
        )
        return replace(self, walls=walls, tiles=())

    def with_tile_configs(self, configs: Mapping[str, TileConfig], default: Optional[TileConfig] = None) -> "Scene":
        for tid in configs:
            if tid not in self._tiles_by_id:
                raise KeyError(f"unknown tile id {tid!r}")
        tiles = tuple(
            replace(t, config=configs.get(t.id, t.config if default is None else default))
            for t in self.tiles
        )
        return replace(self, tiles=tiles)

    def with_p_tx(self, p_tx: float) -> "Scene":
        return replace(self, p_tx=p_tx)


# --- validation ---------------------------------------------------------------


def _rects_overlap(a: RectPanel, b: RectPanel, tol: float = 1e-6) -> bool:
    """Interior overlap of two coplanar rectangles (separating axis test)."""
    eu = a.edge_u.unit()
    ev = a.normal.cross(eu)

    def project(panel):
        return [((c - a.origin).dot(eu), (c - a.origin).dot(ev)) for c in panel.corners()]

    pa, pb = project(a), project(b)
    for poly in (pa, pb):
        for i in range(4):
            (x0, y0), (x1, y1) = poly[i], poly[(i + 1) % 4]
            ax = (y0 - y1, x1 - x0)
            n = math.hypot(*ax)
            ax = (ax[0] / n, ax[1] / n)
            ra = [p[0] * ax[0] + p[1] * ax[1] for p in pa]
            rb = [p[0] * ax[0] + p[1] * ax[1] for p in pb]
            if min(ra) >= max(rb) - tol or min(rb) >= max(ra) - tol:
                return False
    return True


def check_tiles(tiles: Sequence[Tile], walls: Sequence[Wall]) -> None:
    seen: dict[str, int] = {}
    for i, t in enumerate(tiles):
        if t.id in seen:
            raise DuplicateIdError(f"duplicate tile id {t.id!r}", f"tiles[{i}]")
        seen[t.id] = i

    planes: dict[tuple, list[Tile]] = {}
    for t in tiles:
        n = t.panel.normal
        key = tuple(round(c, 6) + 0.0 for c in (*n, t.panel.origin.dot(n)))
        planes.setdefault(key, []).append(t)
    for group in planes.values():
        for i, a in enumerate(group):
            for b in group[i + 1:]:
                if _rects_overlap(a.panel, b.panel):
                    raise TessellationError(f"tiles {a.id!r} and {b.id!r} overlap", "tiles")

    for w in walls:
        if not w.is_hsf:
            continue
        area = math.fsum(t.panel.area for t in tiles if t.wall_id == w.id)
        if abs(area - w.panel.area) > 1e-6 * w.panel.area:
            raise TessellationError(
                f"tiles cover {area:.6f} m^2 of {w.panel.area:.6f} m^2", f"walls[{w.id}]"
            )


def validate_scene(scene: Scene) -> Scene:
    ids = [w.id for w in scene.walls]
    for i, wid in enumerate(ids):
        if wid in ids[:i]:
            raise DuplicateIdError(f"duplicate wall id {wid!r}", f"walls[{i}]")
    names = {m.name for m in scene.materials}
    for i, w in enumerate(scene.walls):
        if w.material not in names:
            raise SchemaError(f"unknown material {w.material!r}", f"walls[{i}]")
    check_tiles(scene.tiles, scene.walls)
    lo, hi = scene.bounds() if scene.walls else ((0, 0, 0), (0, 0, 0))
    # only axes the walls actually span constrain the antennas (a lone floor is flat)
    axes = [k for k in range(3) if hi[k] - lo[k] > 1e-9]
    for label, p in [("tx", scene.tx)] + [(f"rx[{i}]", r) for i, r in enumerate(scene.rx_list)]:
        if not all(lo[k] - 1e-9 <= p[k] <= hi[k] + 1e-9 for k in axes):
            raise PlacementError(f"antenna {tuple(p)} lies outside the room", label)
    if scene.f_c <= 0:
        raise SchemaError("frequency must be positive", "frequency_ghz")
    return scene


# --- JSON I/O -----------------------------------------------------------------


def _vec(obj: Any, loc: str) -> Vec3:
    if not isinstance(obj, (list, tuple)) or len(obj) != 3:
        raise SchemaError("expected a 3-element coordinate list", loc)
    try:
        return vec(obj)
    except (TypeError, ValueError) as e:
        raise SchemaError(str(e), loc) from None


def _require(d: Mapping, key: str, loc: str):
    if key not in d:
        raise SchemaError(f"missing key {key!r}", loc)
    return d[key]


def _tile_config(obj: Mapping, loc: str) -> TileConfig:
    try:
        mode = TileMode(obj.get("mode", "absorb"))
    except ValueError:
        raise SchemaError(f"unknown tile mode {obj.get('mode')!r}", loc) from None
    try:
        return TileConfig(
            mode,
            theta_r=math.radians(float(obj.get("theta_r_deg", 0.0))),
            azimuth=math.radians(float(obj.get("azimuth_deg", 0.0))),
            collimate=bool(obj.get("collimate", True)),
            theta_i=math.radians(float(obj.get("theta_i_deg", 0.0))),
            azimuth_i=math.radians(float(obj.get("azimuth_i_deg", 0.0))),
        )
    except ValueError as e:
        raise SchemaError(str(e), loc) from None


def scene_from_dict(data: Mapping) -> Scene:
    if not isinstance(data, Mapping):
        raise SchemaError("scene file must hold a JSON object")
    units = _require(data, "units", "")
    if units != UNITS:
        raise SchemaError(f"units must be {UNITS}", "units")

    materials = dict(DEFAULT_MATERIALS)
    for name, m in data.get("materials", {}).items():
        try:
            materials[name] = MaterialSpec(
                name,
                float(m["real_permittivity"]),
                float(m.get("conductivity_coeff", 0.0)),
                float(m.get("conductivity_exponent", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"bad material: {e}", f"materials[{name}]") from None

    walls = []
    for i, w in enumerate(_require(data, "walls", "")):
        loc = f"walls[{i}]"
        try:
            role = Role(w.get("role", "plain_wall"))
        except ValueError:
            raise SchemaError(f"unknown role {w.get('role')!r}", loc) from None
        try:
            panel = RectPanel(
                _vec(_require(w, "corner", loc), loc + ".corner"),
                _vec(_require(w, "edge_u", loc), loc + ".edge_u"),
                _vec(_require(w, "edge_v", loc), loc + ".edge_v"),
            )
        except GeometryError as e:
            raise SchemaError(str(e), loc) from None
        tile_size = None
        if role is Role.HSF_WALL:
            hsf = _require(w, "hsf", loc)
            tile_size = float(_require(hsf, "tile_size_m", loc + ".hsf"))
        walls.append(Wall(str(w.get("id", f"wall{i}")), panel, role, w.get("material", "concrete"), tile_size))

    default_cfg = _tile_config({"mode": data.get("default_tile_mode", "absorb")}, "default_tile_mode")
    tiles = [t for w in walls if w.is_hsf for t in tessellate(w, default_cfg)]
    by_id = {t.id: k for k, t in enumerate(tiles)}
    for i, o in enumerate(data.get("tile_overrides", [])):
        loc = f"tile_overrides[{i}]"
        tid = str(_require(o, "id", loc))
        if tid not in by_id:
            raise SchemaError(f"unknown tile id {tid!r}", loc)
        k = by_id[tid]
        tiles[k] = replace(tiles[k], config=_tile_config(o, loc))

    scene = Scene(
        walls=tuple(walls),
        tiles=tuple(tiles),
        tx=_vec(_require(data, "tx", ""), "tx"),
        rx_list=tuple(_vec(r, f"rx[{i}]") for i, r in enumerate(_require(data, "rx", ""))),
        f_c=float(_require(data, "frequency_ghz", "")) * 1e9,
        p_tx=float(_require(data, "power_dbmw", "")),
        materials=tuple(materials.values()),
    )
    return validate_scene(scene)


def load_scene(source: Union[str, Path]) -> Scene:
    with open(source, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON: {e}") from None
    return scene_from_dict(data)


def _config_dict(cfg: TileConfig) -> dict:
    d: dict[str, Any] = {"mode": cfg.mode.value}
    if cfg.mode is TileMode.REFLECT:
        d["theta_r_deg"] = math.degrees(cfg.theta_r)
        d["azimuth_deg"] = math.degrees(cfg.azimuth)
        d["theta_i_deg"] = math.degrees(cfg.theta_i)
        d["azimuth_i_deg"] = math.degrees(cfg.azimuth_i)
    d["collimate"] = cfg.collimate
    return d


def scene_to_dict(scene: Scene, default_mode: TileMode = TileMode.ABSORB) -> dict:
    default_cfg = TileConfig(default_mode)
    walls = []
    for w in scene.walls:
        d = {
            "id": w.id,
            "corner": list(w.panel.origin),
            "edge_u": list(w.panel.edge_u),
            "edge_v": list(w.panel.edge_v),
            "role": w.role.value,
            "material": w.material,
        }
        if w.is_hsf:
            d["hsf"] = {"tile_size_m": w.tile_size}
        walls.append(d)
    return {
        "units": dict(UNITS),
        "frequency_ghz": scene.f_c / 1e9,
        "power_dbmw": scene.p_tx,
        "tx": list(scene.tx),
        "rx": [list(r) for r in scene.rx_list],
        "materials": {
            m.name: {
                "real_permittivity": m.real_permittivity,
                "conductivity_coeff": m.conductivity_coeff,
                "conductivity_exponent": m.conductivity_exponent,
            }
            for m in scene.materials
        },
        "walls": walls,
        "default_tile_mode": default_mode.value,
        "tile_overrides": [
            {"id": t.id, **_config_dict(t.config)} for t in scene.tiles if t.config != default_cfg
        ],
    }


def save_scene(scene: Scene, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2) + "\n", encoding="utf-8")


def scenes_equivalent(a: Scene, b: Scene, tol: float = 1e-9) -> bool:
    """Equality up to ``tol`` on tile angles (degrees round-trip through JSON)."""
    if (a.walls, a.tx, a.rx_list, a.f_c, a.p_tx) != (b.walls, b.tx, b.rx_list, b.f_c, b.p_tx):
        return False
    if set(a.materials) != set(b.materials) or len(a.tiles) != len(b.tiles):
        return False
    for ta, tb in zip(a.tiles, b.tiles):
        if (ta.id, ta.panel, ta.wall_id) != (tb.id, tb.panel, tb.wall_id):
            return False
        ca, cb = ta.config, tb.config
        if ca.mode is not cb.mode or ca.collimate != cb.collimate:
            return False
        angles_a = (ca.theta_r, ca.azimuth, ca.theta_i, ca.azimuth_i)
        angles_b = (cb.theta_r, cb.azimuth, cb.theta_i, cb.azimuth_i)
        if any(abs(x - y) > tol for x, y in zip(angles_a, angles_b)):
            return False
    return True


# --- the two-room scene -------------------------------------------------------

REFERENCE_TILE_COUNT = 222
ROOM_TX = Vec3(7.6, 11.4, 2.0)
ROOM_RX = (
    Vec3(1.15, 0.6, 1.5),
    Vec3(1.15, 3.1, 1.5),
    Vec3(1.15, 5.6, 1.5),
    Vec3(1.15, 8.1, 1.5),
)
# relay tiles per receiver, by tile centre
ROOM_CHAINS = (
    ("10,3.5,0.5", "4.5,0,0.5"),
    ("10,7.5,1.5", "3.5,0,0.5"),
    ("10,5.5,1.5", "4.5,0,1.5"),
    ("10,7.5,0.5", "5.5,0,0.5"),
)
# (plain dBmW, non-ideal HSF dBmW, printed % gain)
REFERENCE_POWERS = (
    (7.23, 16.411, 123.0),
    (8.24, 20.391, 147.0),
    (7.78, 17.841, 129.0),
    (14.91, 15.159, 1.67),
)

ROOM_X, ROOM_Y, ROOM_Z = 10.0, 15.0, 4.0
MID_X0, MID_X1 = 4.75, 5.25  # middle wall faces
MID_Y0 = 3.0  # free end of the middle wall; it joins the y=15 wall


def _two_room_walls(tile_size: float) -> list[Wall]:
    H = ROOM_Z
    hsf = dict(role=Role.HSF_WALL, tile_size=tile_size)
    P = RectPanel
    return [
        Wall("west", P((0, 0, 0), (0, ROOM_Y, 0), (0, 0, H)), **hsf),
        Wall("east", P((ROOM_X, ROOM_Y, 0), (0, -ROOM_Y, 0), (0, 0, H)), **hsf),
        Wall("south", P((ROOM_X, 0, 0), (-ROOM_X, 0, 0), (0, 0, H)), **hsf),
        Wall("north_a", P((0, ROOM_Y, 0), (MID_X0, 0, 0), (0, 0, H)), **hsf),
        Wall("north_b", P((ROOM_X, ROOM_Y, H), (MID_X1 - ROOM_X, 0, 0), (0, 0, -H)), **hsf),
        Wall("mid_west", P((MID_X0, ROOM_Y, 0), (0, MID_Y0 - ROOM_Y, 0), (0, 0, H)), **hsf),
        Wall("mid_east", P((MID_X1, MID_Y0, 0), (0, ROOM_Y - MID_Y0, 0), (0, 0, H)), **hsf),
        Wall("mid_cap", P((MID_X0, MID_Y0, 0), (MID_X1 - MID_X0, 0, 0), (0, 0, H))),
        Wall("floor", P((0, 0, 0), (ROOM_X, 0, 0), (0, ROOM_Y, 0)), role=Role.FLOOR),
        Wall("ceiling", P((0, 0, H), (0, ROOM_Y, 0), (ROOM_X, 0, 0)), role=Role.CEILING),
    ]


def build_paper_scene(strict_count: bool = False, tile_size: float = 1.0) -> Scene:
    """10 m x 15 m x 4 m room split by a 12 m x 0.5 m middle wall.

    The middle wall runs along y from the y=15 wall to y=3, leaving a 3 m
    passage near the y=0 wall. All vertical faces except the 0.5 m end cap
    are HSF-coated; floor, ceiling and cap are plain concrete. Tx sits on the
    east side, the four receivers on the west side of the middle wall.

    Full-height 4 m walls cut into 1 m rows always give a multiple of four
    tiles, so 222 cannot be met; this layout yields 296. ``strict_count``
    raises instead of returning a scene whose count differs from 222.
    """
    walls = _two_room_walls(tile_size)
    tiles = [t for w in walls if w.is_hsf for t in tessellate(w)]
    scene = validate_scene(
        Scene(tuple(walls), tuple(tiles), ROOM_TX, ROOM_RX, f_c=60e9, p_tx=100.0)
    )
    if strict_count and len(tiles) != REFERENCE_TILE_COUNT:
        raise TessellationError(
            f"layout yields {len(tiles)} tiles, expected {REFERENCE_TILE_COUNT}", "build_paper_scene"
        )
    return scene


# --- tile chains --------------------------------------------------------------


@dataclass(frozen=True)
class TileAssignment:
    rx_id: str
    chain: tuple[str, ...]
    configs: tuple[TileConfig, ...]
    predicted_power: float


def chain_configs(scene: Scene, rx: Vec3, chain: Sequence[str], collimate: bool = True) -> dict[str, TileConfig]:
    """Reflect configs steering each tile of ``chain`` from the previous hop to the next."""
    tiles = [scene.tile(t) for t in chain]
    sources = [scene.tx] + [t.panel.center for t in tiles[:-1]]
    hops = [t.panel.center for t in tiles[1:]] + [rx]
    return {
        t.id: TileConfig.reflect_towards(
            t.panel, hop - t.panel.center, src - t.panel.center, collimate=collimate
        )
        for t, src, hop in zip(tiles, sources, hops)
    }


def configure_chain(scene: Scene, rx: Vec3, chain: Sequence[str], collimate: bool = True) -> Scene:
    """Scene with ``chain`` steering towards rx and every other tile absorbing."""
    return scene.with_tile_configs(
        chain_configs(scene, rx, chain, collimate), default=TileConfig(TileMode.ABSORB)
    )


def _power(components: Iterable[PathComponent], p_tx: float) -> float:
    total = math.fsum(c.power for c in components)
    return p_tx + 10 * math.log10(total) if total > 0 else float("-inf")


class _Scorer:
    """Noncoherent power of candidate chains, sharing the chain-independent part."""

    def __init__(self, scene: Scene, rx: Vec3, config: ChannelConfig, table: CoeffTable):
        self.rx = rx
        self.config = config
        self.table = table
        self.base = scene.with_tile_configs({}, default=TileConfig(TileMode.ABSORB))
        cr = assemble_cir(self.base, scene.tx, rx, config=config, table=table)
        self.fixed = [c for c in cr.components if c.kind is not PathKind.HSF_LEAKAGE]
        self.leak = {c.via_ids[0]: c for c in cr.of_kind(PathKind.HSF_LEAKAGE)}
        self.wavelength = scene.wavelength
        self.p_tx = scene.p_tx

    def score(self, chain: Sequence[str], collimate: bool = True) -> Optional[float]:
        scene = self.base
        try:
            cfgs = chain_configs(scene, self.rx, chain, collimate)
        except SteeringError:
            return None
        tiles = [replace(scene.tile(t), config=cfgs[t]) for t in chain]
        if not chain_delivers(tiles, scene.tx, self.rx, scene.blockers, self.wavelength, self.config):
            return None
        comp = chain_component(scene, scene.tx, self.rx, tiles, self.table, scene.f_c, self.config)
        leaks = [c for tid, c in self.leak.items() if tid not in cfgs]
        return _power([*self.fixed, *leaks, comp], self.p_tx)


def score_chain(
    scene: Scene,
    rx: Vec3,
    chain: Sequence[str],
    config: ChannelConfig = ChannelConfig(),
    table: Optional[CoeffTable] = None,
) -> Optional[float]:
    """Predicted noncoherent power (dBmW) with ``chain`` configured, or None if infeasible."""
    return _Scorer(scene, rx, config, table or default_table()).score(chain)


def select_tiles(
    scene: Scene,
    rx: Vec3,
    chain_length: int = 2,
    config: ChannelConfig = ChannelConfig(),
    table: Optional[CoeffTable] = None,
    rx_id: str = "rx",
) -> TileAssignment:
    """Exhaustive search over single tiles and ordered tile pairs.

    Each candidate is configured to steer tx -> tile (-> tile) -> rx and
    scored by noncoherent received power; ties go to the lexicographically
    smallest chain.
    """
    if not 1 <= chain_length <= 2:
        raise ValueError("chain_length must be 1 or 2")
    table = table or default_table()
    scorer = _Scorer(scene, rx, config, table)
    blockers = scene.blockers

    def sees(tile, p):
        return tile.panel.signed_distance(p) > geom.EPS and not geom.is_occluded(p, tile.panel.center, blockers)

    from_tx = [t for t in scene.tiles if sees(t, scene.tx)]
    to_rx = [t for t in scene.tiles if sees(t, rx)]
    to_rx_ids = {t.id for t in to_rx}

    candidates: list[tuple[str, ...]] = [(t.id,) for t in from_tx if t.id in to_rx_ids]
    if chain_length == 2:
        for t1 in from_tx:
            c1 = t1.panel.center
            for t2 in to_rx:
                if t2 is t1:
                    continue
                c2 = t2.panel.center
                if t1.panel.signed_distance(c2) <= geom.EPS or t2.panel.signed_distance(c1) <= geom.EPS:
                    continue
                if geom.is_occluded(c1, c2, blockers):
                    continue
                candidates.append((t1.id, t2.id))

    best: Optional[tuple[float, tuple[str, ...]]] = None
    for chain in candidates:
        p = scorer.score(chain)
        if p is None:
            continue
        if best is None or p > best[0] or (p == best[0] and chain < best[1]):
            best = (p, chain)
    if best is None:
        raise SceneError("no unoccluded tile chain reaches the receiver", rx_id)
    cfgs = chain_configs(scene, rx, best[1])
    return TileAssignment(rx_id, best[1], tuple(cfgs[t] for t in best[1]), best[0])
