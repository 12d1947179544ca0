"""Command line entry point: ``hsfsim {design,simulate,compare,tables,export-scene}``.

Exit codes: 0 success, 2 user or configuration error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from importlib import metadata
from typing import Optional, Sequence

from .channel import (
    ChannelConfig,
    PowerMode,
    assemble_cir,
    cir_csv_text,
    gain_percent,
    received_power,
)
from .hsf import (
    C0,
    Rounding,
    SteeringError,
    TableRangeError,
    achieved_angle,
    default_table,
    design_supercell,
)
from .scenario import (
    ROOM_CHAINS,
    ROOM_RX,
    REFERENCE_POWERS,
    SceneError,
    build_paper_scene,
    configure_chain,
    load_scene,
    save_scene,
    select_tiles,
)

BUILTIN_PAPER = "builtin:paper"
EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 2, 3


class UserError(Exception):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _fmt_dbm(p: float) -> str:
    return "-inf dBmW" if p == float("-inf") else f"{p:.3f} dBmW"


def _num(p: float) -> str:
    if math.isinf(p):
        return "-inf" if p < 0 else "inf"
    return "nan" if math.isnan(p) else f"{p:.6f}"


def _load(source: str):
    if source == BUILTIN_PAPER:
        return build_paper_scene()
    return load_scene(source)


def _parse_chain(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(";") if t.strip())


def _human_stream(args):
    # keep stdout clean when the CSV goes there
    return sys.stderr if args.csv_out == "-" else sys.stdout


def _emit(text: str, path: Optional[str]) -> None:
    if path == "-":
        sys.stdout.write(text)
    elif path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# --- design -------------------------------------------------------------------


def cmd_design(args) -> int:
    wavelength = args.lambda_mm * 1e-3
    d_x = args.dx_mm * 1e-3
    try:
        d = design_supercell(
            math.radians(args.theta_i), math.radians(args.theta_r), args.order,
            wavelength, d_x, Rounding(args.policy),
        )
    except SteeringError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USER
    print(f"N_m            {d.n_m}")
    print(f"order m        {d.m}")
    print(f"theta_i        {args.theta_i:.4f} deg")
    print(f"theta_r target {math.degrees(d.theta_r_target):.4f} deg")
    print(f"theta_r        {math.degrees(d.theta_r_achieved):.4f} deg (achieved)")
    print(f"period         {d.period * 1e3:.4f} mm")
    print("phase profile (x mm, phi rad):")
    for x, phi in d.phase_profile:
        print(f"  {x * 1e3:8.3f}  {phi:.6f}")
    return EXIT_OK


# --- simulate -----------------------------------------------------------------


def _channel_config(args) -> ChannelConfig:
    return ChannelConfig(
        baseline=getattr(args, "baseline", False),
        max_order=args.max_order,
        beam_tolerance_deg=args.beam_tol,
        ideal_hsf=getattr(args, "ideal_hsf", False),
        spreading_after_collimation=args.spreading_after_collimation,
    )


def cmd_simulate(args) -> int:
    scene = _load(args.scene)
    if not 0 <= args.rx_index < len(scene.rx_list):
        raise UserError(f"rx index {args.rx_index} out of range (scene has {len(scene.rx_list)})")
    rx = scene.rx_list[args.rx_index]
    chain: tuple[str, ...] = ()
    if args.chain is not None:
        chain = _parse_chain(args.chain)
    elif args.scene == BUILTIN_PAPER and args.rx_index < len(ROOM_CHAINS):
        chain = ROOM_CHAINS[args.rx_index]
    if chain:
        try:
            scene = configure_chain(scene, rx, chain)
        except KeyError as e:
            raise UserError(f"unknown tile id {e.args[0]}") from None
    cfg = _channel_config(args)
    cr = assemble_cir(scene, scene.tx, rx, config=cfg, rx_id=f"rx{args.rx_index}")
    mode = PowerMode(args.mode)
    log = _human_stream(args)
    print(f"scene {args.scene}  rx{args.rx_index} {tuple(rx)}  f_c {scene.f_c / 1e9:g} GHz", file=log)
    if chain:
        print("chain " + " -> ".join(f"({c})" for c in chain), file=log)
    print(f"{'#':>3} {'kind':<16} {'delay_ns':>10} {'gain_db':>9} {'bounces':>7}  via", file=log)
    for i, c in enumerate(cr.components):
        g = 20 * math.log10(abs(c.complex_gain))
        print(f"{i:>3} {c.kind.value:<16} {c.delay * 1e9:>10.4f} {g:>9.3f} {c.bounce_count:>7}  {';'.join(c.via_ids)}", file=log)
    print(f"received power ({mode.value}): {_fmt_dbm(received_power(cr, scene.p_tx, mode))}", file=log)
    if args.csv_out:
        _emit(cir_csv_text(cr.components), args.csv_out)
    return EXIT_OK


# --- compare ------------------------------------------------------------------


@dataclass
class RxResult:
    rx_index: int
    rx: tuple[float, float, float]
    chain: tuple[str, ...]
    plain_dbmw: float
    hsf_dbmw: float
    gain_pct: Optional[float]

    @property
    def delta_db(self) -> float:
        if math.isinf(self.plain_dbmw) and math.isinf(self.hsf_dbmw):
            return float("nan")
        return self.hsf_dbmw - self.plain_dbmw


@dataclass
class RunReport:
    command: str
    scene: str
    results: list[RxResult] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    version: str = field(default_factory=_version)

    def to_json(self) -> str:
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            return x

        return json.dumps(clean(asdict(self)), indent=2, sort_keys=True) + "\n"


COMPARE_COLUMNS = ("rx_index", "rx_x", "rx_y", "rx_z", "tiles", "plain_dbmw", "hsf_dbmw", "delta_db", "gain_pct")


def compare_csv_text(results: Sequence[RxResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARE_COLUMNS)
    for r in results:
        w.writerow([
            r.rx_index, *(f"{c:g}" for c in r.rx), ";".join(r.chain),
            _num(r.plain_dbmw), _num(r.hsf_dbmw), _num(r.delta_db),
            "" if r.gain_pct is None else f"{r.gain_pct:.6f}",
        ])
    return buf.getvalue()


def run_compare(scene, scene_label: str, cfg: ChannelConfig, use_table_chains: bool) -> RunReport:
    table = default_table()
    plain_cfg = ChannelConfig(baseline=True, max_order=cfg.max_order, polarization=cfg.polarization)
    report = RunReport(
        "compare", scene_label,
        config={
            "aggregation": PowerMode.NONCOHERENT.value,
            "max_order": cfg.max_order,
            "beam_tolerance_deg": cfg.beam_tolerance_deg,
            "ideal_hsf": cfg.ideal_hsf,
            "spreading_after_collimation": cfg.spreading_after_collimation,
            "rounding": cfg.rounding.value,
            "d_x_m": cfg.d_x,
            "chains": "table" if use_table_chains else "search",
        },
    )
    for i, rx in enumerate(scene.rx_list):
        plain = received_power(assemble_cir(scene, scene.tx, rx, config=plain_cfg, table=table), scene.p_tx)
        if use_table_chains:
            chain = ROOM_CHAINS[i]
        else:
            try:
                chain = select_tiles(scene, rx, config=cfg, table=table, rx_id=f"rx{i}").chain
            except SceneError:
                chain = ()
        hsf_scene = configure_chain(scene, rx, chain) if chain else scene
        hsf = received_power(assemble_cir(hsf_scene, scene.tx, rx, config=cfg, table=table), scene.p_tx)
        gain = None
        if plain != 0 and math.isfinite(plain) and math.isfinite(hsf):
            gain = gain_percent(hsf, plain)
        report.results.append(RxResult(i, tuple(rx), tuple(chain), plain, hsf, gain))
    return report


def cmd_compare(args) -> int:
    scene = _load(args.scene)
    if not scene.rx_list:
        raise UserError("scene has no receivers")
    use_table = args.chains == "table"
    if use_table and (args.scene != BUILTIN_PAPER or len(scene.rx_list) != len(ROOM_CHAINS)):
        raise UserError("--chains table is only available for builtin:paper")
    report = run_compare(scene, args.scene, _channel_config(args), use_table)
    log = _human_stream(args)
    print(f"{'rx':>3}  {'location':<18} {'tiles':<28} {'plain':>9} {'hsf':>9} {'dB':>7} {'gain %':>9}", file=log)
    for r in report.results:
        loc = "(" + ", ".join(f"{c:g}" for c in r.rx) + ")"
        tiles = " ".join(f"({t})" for t in r.chain) or "-"
        g = "n/a" if r.gain_pct is None else f"{r.gain_pct:.2f}"
        print(f"{r.rx_index:>3}  {loc:<18} {tiles:<28} {_num(r.plain_dbmw)[:9]:>9} {_num(r.hsf_dbmw)[:9]:>9} {r.delta_db:>7.2f} {g:>9}", file=log)
    if args.csv_out:
        _emit(compare_csv_text(report.results), args.csv_out)
    if args.report_json:
        _emit(report.to_json(), args.report_json)
    return EXIT_OK


# --- tables -------------------------------------------------------------------


def _table1() -> None:
    print(f"{'theta_i':>8} {'alpha_abs_db':>13}")
    for ti, a in default_table().absorption_rows:
        print(f"{ti:>8g} {a:>13g}")


def _table2(wavelength: float, d_x: float) -> None:
    print(f"{'theta_i':>7} {'theta_r':>7} {'N_m':>4} {'alpha_db':>9} {'pct':>7} | "
          f"{'N_m*':>4} {'dN':>3} {'theta_r(N_m)':>12} {'d_theta':>8}")
    for r in default_table().reflection_rows:
        ti, tr = math.radians(r.theta_i_deg), math.radians(r.theta_r_deg)
        n = design_supercell(ti, tr, 1, wavelength, d_x, Rounding.ROUND).n_m
        try:
            ach = math.degrees(achieved_angle(r.n_m, ti, 1, wavelength, d_x))
            ach_s, d_s = f"{ach:.3f}", f"{ach - r.theta_r_deg:+.3f}"
        except SteeringError:
            ach_s, d_s = "evanescent", "n/a"
        print(f"{r.theta_i_deg:>7g} {r.theta_r_deg:>7g} {r.n_m:>4} {r.alpha_ref_db:>9g} {r.reflected_power_pct:>7g} | "
              f"{n:>4} {n - r.n_m:>+3} {ach_s:>12} {d_s:>8}")


def _table3() -> None:
    print(f"{'rx':<16} {'tiles':<30} {'plain':>6} {'hsf':>7} {'gain':>5} | {'gain*':>7} {'delta':>6}")
    for rx, chain, (plain, hsf, gain) in zip(ROOM_RX, ROOM_CHAINS, REFERENCE_POWERS):
        g = gain_percent(hsf, plain)
        loc = "(" + ", ".join(f"{c:g}" for c in rx) + ")"
        tiles = " ".join(f"({t.replace(',', ', ')})" for t in chain)
        print(f"{loc:<16} {tiles:<30} {plain:>6g} {hsf:>7g} {gain:>5g} | {g:>7.2f} {g - gain:>+6.2f}")


def cmd_tables(args) -> int:
    if args.which == 1:
        _table1()
    elif args.which == 2:
        _table2(args.lambda_mm * 1e-3, args.dx_mm * 1e-3)
    else:
        _table3()
    return EXIT_OK


def cmd_export_scene(args) -> int:
    save_scene(_load(args.scene), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def _add_channel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scene", default=BUILTIN_PAPER, help="scene JSON path or builtin:paper")
    p.add_argument("--max-order", type=int, default=4, help="plain reflection order")
    p.add_argument("--beam-tol", type=float, default=2.0, help="beam acceptance (deg)")
    p.add_argument("--spreading-after-collimation", action="store_true")
    p.add_argument("--csv-out", help="write CSV here ('-' for stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hsfsim", description="HSF-coated indoor 60 GHz channel simulator")
    ap.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = ap.add_subparsers(dest="command", required=True)
    lam = C0 / 60e9 * 1e3

    p = sub.add_parser("design", help="supercell size for an anomalous reflection")
    p.add_argument("--theta-i", type=float, required=True, help="incidence angle (deg)")
    p.add_argument("--theta-r", type=float, required=True, help="target reflection angle (deg)")
    p.add_argument("--order", type=int, default=1, help="diffraction order m")
    p.add_argument("--lambda-mm", type=float, default=lam)
    p.add_argument("--dx-mm", type=float, default=1.0)
    p.add_argument("--policy", choices=[r.value for r in Rounding], default="round")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="channel response of one link")
    _add_channel_flags(p)
    p.add_argument("--rx-index", type=int, default=0)
    p.add_argument("--mode", choices=[m.value for m in PowerMode], default="noncoherent")
    p.add_argument("--baseline", action="store_true", help="uncoated walls")
    p.add_argument("--chain", help="relay tile ids separated by ';'")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="plain vs HSF received power per receiver")
    _add_channel_flags(p)
    p.add_argument("--ideal-hsf", action="store_true", help="lossless steering")
    p.add_argument("--chains", choices=["table", "search"], default=None,
                   help="relay tiles: tabulated (builtin scene only) or searched")
    p.add_argument("--report-json", help="write the run report here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("tables", help="embedded coefficient and power tables")
    p.add_argument("--which", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--lambda-mm", type=float, default=lam)
    p.add_argument("--dx-mm", type=float, default=1.0)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("export-scene", help="write a scene as JSON")
    p.add_argument("--scene", default=BUILTIN_PAPER)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_scene)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "chains", "x") is None:
        args.chains = "table" if args.scene == BUILTIN_PAPER else "search"
    try:
        return args.func(args)
    except (UserError, SceneError, SteeringError, TableRangeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USER
    except Exception as e:  # invariant violations and bugs
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
