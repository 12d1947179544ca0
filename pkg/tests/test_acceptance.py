"""Acceptance criteria, one check per criterion.

Under pytest every check is a test and a PASS/FAIL line is added to the
terminal summary. ``python3 tests/test_acceptance.py`` prints the same lines.
"""

import cmath
import math
import os
import random
import sys
import tempfile

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import ACCEPTANCE_LINES, shoebox  # noqa: E402
from hsfsim import geom, raytracer  # noqa: E402
from hsfsim.channel import (  # noqa: E402
    ChannelConfig,
    ChannelResponse,
    PathComponent,
    PathKind,
    PowerMode,
    assemble_cir,
    cir_csv_text,
    gain_percent,
    power_delay_profile,
    received_power,
    spreading_gain,
)
from hsfsim.geom import RectPanel, Vec3  # noqa: E402
from hsfsim.hsf import (  # noqa: E402
    C0,
    Rounding,
    SteeringError,
    absorption_coeff,
    achieved_angle,
    default_table,
    design_supercell,
    phase_profile,
)
from hsfsim.materials import Polarization, fresnel_reflection  # noqa: E402
from hsfsim.raytracer import TraceBudget  # noqa: E402
from hsfsim.scenario import (  # noqa: E402
    ROOM_CHAINS,
    ROOM_RX,
    REFERENCE_POWERS,
    REFERENCE_TILE_COUNT,
    ROOM_TX,
    Scene,
    Wall,
    build_paper_scene,
    configure_chain,
    load_scene,
    save_scene,
    scenes_equivalent,
)

LAM = C0 / 60e9
DX = 1e-3
F = 60e9
R = math.radians

CHECKS = []


def criterion(label):
    def wrap(fn):
        CHECKS.append((label, fn))
        return fn
    return wrap


_SCENE = None


def room():
    global _SCENE
    if _SCENE is None:
        _SCENE = build_paper_scene()
    return _SCENE


@criterion("1a supercell N_m within +-1 of the tabulated value (Round policy)")
def check_1a():
    bad = []
    for r in default_table().reflection_rows:
        n = design_supercell(R(r.theta_i_deg), R(r.theta_r_deg), 1, LAM, DX, Rounding.ROUND).n_m
        if abs(n - r.n_m) > 1:
            bad.append(f"({r.theta_i_deg:g},{r.theta_r_deg:g}): {n} vs {r.n_m}")
    return not bad, f"14 rows, {len(bad)} outside +-1" + (": " + "; ".join(bad) if bad else "")


@criterion("1b achieved angle of the tabulated N_m within 4 deg of theta_r")
def check_1b():
    bad = []
    for r in default_table().reflection_rows:
        try:
            ach = math.degrees(achieved_angle(r.n_m, R(r.theta_i_deg), 1, LAM, DX))
        except SteeringError:
            bad.append(f"({r.theta_i_deg:g},{r.theta_r_deg:g},N={r.n_m}): evanescent")
            continue
        if abs(ach - r.theta_r_deg) > 4.0:
            bad.append(f"({r.theta_i_deg:g},{r.theta_r_deg:g},N={r.n_m}): {ach:.2f}")
    return not bad, f"{14 - len(bad)}/14 rows within 4 deg" + ("; off: " + "; ".join(bad) if bad else "")


@criterion("2 absorption table exact at the 7 tabulated angles")
def check_2():
    expected = [(0, -42), (10, -33), (20, -36), (30, -27), (40, -29), (50, -26), (60, -28)]
    got = [(d, absorption_coeff(default_table(), R(d))) for d, _ in expected]
    bad = [(d, v) for (d, v), (_, w) in zip(got, expected) if v != w]
    return not bad, f"mismatches: {bad}" if bad else "7/7 exact"


@criterion("3 percent-gain arithmetic on the tabulated powers")
def check_3():
    targets = [127.0, 147.0, 129.0, 1.67]
    got = [gain_percent(h, p) for p, h, _ in REFERENCE_POWERS]
    ok = all(abs(g - t) <= 1.0 for g, t in zip(got, targets))
    detail = ", ".join(f"{g:.2f}" for g in got)
    return ok, f"recomputed [{detail}] vs [127.0, 147, 129, 1.67]; row 1 printed as 123"


@criterion("4 HSF received power within 5 dB of the tabulated values, HSF > plain")
def check_4():
    s = room()
    parts, ok = [], True
    plain_cfg = ChannelConfig(baseline=True)
    for rx, chain, (_, ref, _) in zip(ROOM_RX, ROOM_CHAINS, REFERENCE_POWERS):
        cfg_scene = configure_chain(s, rx, chain, collimate=True)
        hsf = received_power(assemble_cir(cfg_scene, s.tx, rx), 100.0, PowerMode.NONCOHERENT)
        plain = received_power(assemble_cir(s, s.tx, rx, config=plain_cfg), 100.0)
        ok &= abs(hsf - ref) <= 5.0 and hsf > plain
        parts.append(f"{hsf:.2f} (ref {ref}, plain {plain:.2f})")
    return ok, "; ".join(parts)


@criterion("5a free-space 1 m link at 60 GHz gives 32.0 +- 0.1 dBmW")
def check_5a():
    s = Scene((), (), Vec3(0, 0, 0), (Vec3(1, 0, 0),))
    p = raytracer.plain_received_power(s, s.tx, s.rx_list[0], p_tx=100.0, f_c=F)
    return abs(p - 32.0) <= 0.1, f"{p:.4f} dBmW"


def _scaled_box(k):
    walls = shoebox().walls
    scaled = tuple(
        Wall(w.id, RectPanel(w.panel.origin * k, w.panel.edge_u * k, w.panel.edge_v * k), w.role)
        for w in walls
    )
    s = shoebox()
    return Scene(scaled, (), s.tx * k, (s.rx_list[0] * k,))


@criterion("5b doubling a path distance costs 6.02 +- 0.01 dB")
def check_5b():
    # scaling the whole room by 2 doubles every path length and keeps every angle
    a, b = _scaled_box(1.0), _scaled_box(2.0)
    ca = raytracer.plain_components(a, a.tx, a.rx_list[0], F, TraceBudget(3))
    cb = raytracer.plain_components(b, b.tx, b.rx_list[0], F, TraceBudget(3))
    da = {c.via_ids: c.power for c in ca}
    drops = [10 * math.log10(da[c.via_ids] / c.power) for c in cb]
    drops.append(20 * math.log10(spreading_gain(F, 7.3) / spreading_gain(F, 14.6)))
    worst = max(abs(d - 6.0206) for d in drops)
    return len(ca) == len(cb) and worst <= 0.01, f"{len(drops)} components, max deviation {worst:.2e} dB"


@criterion("5c plain power nondecreasing in reflection order (two-room scene)")
def check_5c():
    s = room()
    ok, parts = True, []
    for rx in ROOM_RX:
        ps = [raytracer.plain_received_power(s, s.tx, rx, budget=TraceBudget(n)) for n in range(5)]
        ok &= all(b >= a for a, b in zip(ps, ps[1:]))
        parts.append("/".join("-inf" if math.isinf(p) else f"{p:.1f}" for p in ps))
    return ok, "orders 0..4: " + "; ".join(parts)


@criterion("6 shoebox order<=2 paths match the image-lattice oracle")
def check_6():
    size = (4.0, 3.0, 2.5)
    worst, counts, ok = 0.0, [], True
    rnd = random.Random(7)
    for _ in range(5):
        tx = tuple(rnd.uniform(0.2, L - 0.2) for L in size)
        rx = tuple(rnd.uniform(0.2, L - 0.2) for L in size)
        s = shoebox(tx, rx, size)
        got = sorted(p.total_length for p in raytracer.enumerate_paths(s, s.tx, s.rx_list[0], TraceBudget(2)))
        want = []
        for nx in range(-2, 3):
            for ny in range(-2, 3):
                for nz in range(-2, 3):
                    if abs(nx) + abs(ny) + abs(nz) > 2:
                        continue
                    img = [n * L + (x if n % 2 == 0 else L - x) for n, L, x in zip((nx, ny, nz), size, tx)]
                    want.append(math.dist(img, rx))
        want.sort()
        counts.append(len(got))
        ok &= len(got) == len(want)
        if len(got) == len(want):
            worst = max([worst] + [abs(a - b) for a, b in zip(got, want)])
    return ok and worst <= 1e-6, f"counts {counts} (oracle 25), max length error {worst:.1e} m"


@criterion("7 no direct component at any of the four receivers")
def check_7():
    s = room()
    los = []
    for rx in ROOM_RX:
        for cfg in (ChannelConfig(), ChannelConfig(baseline=True)):
            cr = assemble_cir(s, s.tx, rx, config=cfg)
            los.append(len(cr.of_kind(PathKind.LOS)))
        los.append(int(not geom.is_occluded(s.tx, rx, s.blockers)))
    return sum(los) == 0, f"LOS counts {los}"


@criterion("8 invariant suites")
def check_8():
    s = room()
    fails = []
    # delay = length / c
    cs = configure_chain(s, ROOM_RX[0], ROOM_CHAINS[0])
    cr = assemble_cir(cs, s.tx, ROOM_RX[0], config=ChannelConfig(baseline=True))
    cr2 = assemble_cir(cs, s.tx, ROOM_RX[0])
    for c in cr.components + cr2.components:
        if abs(c.delay - c.length / C0) > 1e-12:
            fails.append("delay")
    # image involution
    rnd = random.Random(3)
    for w in s.walls:
        p = Vec3(rnd.uniform(-5, 15), rnd.uniform(-5, 20), rnd.uniform(-2, 6))
        if geom.mirror_point(geom.mirror_point(p, w.panel), w.panel).dist(p) > 1e-9:
            fails.append("involution")
    # Fresnel passivity and Brewster dip
    eps = complex(5.24, -0.34)
    for k in range(900):
        for pol in Polarization:
            if abs(fresnel_reflection(eps, R(k / 10), pol)) > 1:
                fails.append("passivity")
    tm = [abs(fresnel_reflection(5.24 + 0j, R(k / 10), Polarization.TM)) for k in range(900)]
    if abs(tm.index(min(tm)) / 10 - math.degrees(math.atan(math.sqrt(5.24)))) > 0.1:
        fails.append("brewster")
    # phase slope
    for n in range(2, 20):
        slope = 2 * math.pi / (n * DX)
        if any(phi != slope * x for x, phi in phase_profile(n, 1, DX)):
            fails.append("slope")
    # PDP conservation
    comps = tuple(
        PathComponent(PathKind.PLAIN_REFLECTED, rnd.uniform(1e-6, 1e-3) * cmath.exp(1j * rnd.random()),
                      rnd.uniform(1e-9, 1e-7), 0, 0, 1, (str(i),))
        for i in range(50)
    )
    pdp = power_delay_profile(ChannelResponse(comps, F), 2e-9)
    tot = math.fsum(c.power for c in comps)
    if abs(math.fsum(10 ** (p / 10) for _, p in pdp) - tot) > 1e-9 * tot:
        fails.append("pdp")
    # ideal-HSF limit
    ideal = assemble_cir(cs, s.tx, ROOM_RX[0], config=ChannelConfig(ideal_hsf=True))
    c = ideal.of_kind(PathKind.HSF_REFLECTED)[0]
    d1 = s.tx.dist(s.tile(ROOM_CHAINS[0][0]).panel.center)
    if abs(abs(c.complex_gain) - spreading_gain(F, d1)) > 1e-12 * spreading_gain(F, d1):
        fails.append("ideal")
    # CSV determinism
    if cir_csv_text(cr.components) != cir_csv_text(assemble_cir(cs, s.tx, ROOM_RX[0],
                                                                config=ChannelConfig(baseline=True)).components):
        fails.append("csv")
    return not fails, "all hold" if not fails else f"violations: {sorted(set(fails))}"


@criterion("9a two-room scene has exactly 222 tiles")
def check_9a():
    n = len(room().tiles)
    return n == REFERENCE_TILE_COUNT, f"{n} tiles"


@criterion("9b two-room scene Tx, receivers and serialize/load round trip")
def check_9b():
    s = room()
    ok = s.tx == Vec3(7.6, 11.4, 2) and s.rx_list == tuple(ROOM_RX)
    ok &= s.rx_list == (Vec3(1.15, 0.6, 1.5), Vec3(1.15, 3.1, 1.5), Vec3(1.15, 5.6, 1.5), Vec3(1.15, 8.1, 1.5))
    with tempfile.TemporaryDirectory() as d:
        f = os.path.join(d, "fig6.json")
        save_scene(s, f)
        same = scenes_equivalent(load_scene(f), s)
    return ok and same, f"tx {tuple(s.tx)}, {len(s.rx_list)} rx, round trip {'equal' if same else 'differs'}"


def _line(label, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"


@pytest.mark.parametrize("label,fn", CHECKS, ids=[c[0].split()[0] for c in CHECKS])
def test_criterion(label, fn):
    ok, detail = fn()
    line = _line(label, ok, detail)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    results = [(label, *fn()) for label, fn in CHECKS]
    for label, ok, detail in results:
        print(_line(label, ok, detail))
    sys.exit(0 if all(ok for _, ok, _ in results) else 1)
