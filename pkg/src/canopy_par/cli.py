"""``canopy-par`` command line.

Commands: simulate, sweep, gen-plant, validate, export-field. Thread count
comes from ``--threads``, then ``CANOPY_PAR_THREADS``, then the machine.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

THREADS_ENV = "CANOPY_PAR_THREADS"
log = logging.getLogger("canopy_par")


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    elif os.environ.get(THREADS_ENV):
        try:
            n = int(os.environ[THREADS_ENV])
        except ValueError:
            raise SystemExit(f"error: {THREADS_ENV} must be an integer") from None
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise SystemExit("error: thread count must be >= 1")
    return n


def _set_threads(n: int):
    # numba fixes its pool size at import; widen it first so set_num_threads accepts n
    if "numba" not in sys.modules:
        cur = int(os.environ.get("NUMBA_NUM_THREADS", os.cpu_count() or 1))
        os.environ["NUMBA_NUM_THREADS"] = str(max(cur, n))
    import numba
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def _load_cfg(args):
    from .config import ConfigError, config_from_dict, load_config
    cfg = load_config(args.config) if args.config else config_from_dict({})
    if args.seed is not None:
        # re-derive everything that defaulted to the top-level seed
        data = json.loads(Path(args.config).read_text() or "{}") if args.config else {}
        data["seed"] = args.seed
        cfg = config_from_dict(data)
    if args.unit is not None:
        cfg = dataclasses.replace(cfg, unit=args.unit)
        try:
            cfg.to_m(cfg.field.row_spacing)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def _out_dir(args, cfg) -> Path:
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _plant(cfg):
    from .geometry import Organ
    from .plantgen import PlantModel, estimate_leaf_plane_azimuth, generate_maize
    from .ply import load_ply
    if cfg.plant.ply:
        mesh = load_ply(cfg.plant.ply, cfg.plant.ply_unit or cfg.unit)
        lo, hi = mesh.bbox
        # scanned plants are anchored at the bottom centre of their bounding box
        anchor = np.array([(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, lo[2]])
        leaf = mesh.organ == Organ.LEAF
        return PlantModel(mesh, anchor, estimate_leaf_plane_azimuth(mesh), float(mesh.areas[leaf].sum()))
    return generate_maize(cfg.plant.params)


FLUX_HEADER = ("primitive_id", "plant_id", "organ", "area_m2", "incident_direct", "incident_diffuse",
               "incident_scattered", "incident_total", "absorbed")
SENSOR_HEADER = ("timestamp", "sensor_id", "par_flux", "fraction_intercepted")
MIDDAY_HEADER = ("date", "time", "zenith_deg", "par_per_ground_area_umol_m2_s", "fraction_intercepted")


def flux_rows(scene, flux):
    from .geometry import Organ
    m = scene.mesh
    areas = m.areas
    d, f, s, tot, ab = (flux.incident_direct, flux.incident_diffuse, flux.incident_scattered,
                        flux.incident_total, flux.absorbed)
    for i in range(len(m)):
        yield (i, int(m.plant_id[i]), Organ(int(m.organ[i])).name.lower(), repr(float(areas[i])),
               repr(float(d[i])), repr(float(f[i])), repr(float(s[i])), repr(float(tot[i])), repr(float(ab[i])))


def _opt(x):
    return "" if x is None else repr(float(x))


def cmd_simulate(args) -> int:
    from .field import build_field
    from .radiation import default_sensors
    from .simdriver import axis_values, daily_rows, run_season, run_timepoint, season_row, write_table
    cfg = _load_cfg(args)
    out = _out_dir(args, cfg)
    layout = cfg.layout(_plant(cfg))
    scene = build_field(layout)
    schedule = cfg.schedule_obj()
    sensors = default_sensors(scene)
    season = run_season(scene, schedule, cfg.radiation, cfg.sky, sensors)
    axes = axis_values(schedule.location, layout.row_spacing, layout.plant_spacing, layout.orientation,
                        layout.row_azimuth)
    write_table(daily_rows(axes, season), out / "daily.csv")
    write_table([season_row(axes, season)], out / "seasonal.csv")

    mids, sens = [], []
    for day in season.days:
        mid = day.midday()
        fr = mid.sensors.fraction_intercepted if mid.sensors else None
        mids.append((day.date.isoformat(), mid.time.isoformat()[11:], repr(math.degrees(mid.sun.zenith)),
                     repr(mid.per_ground_area), _opt(fr)))
        for tp in day.timepoints:
            if tp.sensors is None:
                continue
            for sid, val in tp.sensors.par_flux.items():
                sens.append((tp.time.isoformat(), sid, repr(float(val)), _opt(tp.sensors.fraction_intercepted)))
    _write_csv(out / "midday.csv", MIDDAY_HEADER, mids)
    _write_csv(out / "sensors.csv", SENSOR_HEADER, sens)

    # per-primitive map at the first date's highest-sun timepoint
    first = season.days[0].midday()
    tp = run_timepoint(scene, schedule.location, first.time, cfg.radiation, cfg.sky, None, keep_flux=True)
    _write_csv(out / "flux.csv", FLUX_HEADER, flux_rows(scene, tp.flux))
    print(f"simulate: {len(season.days)} day(s), season {season.per_ground_area:.4f} mol m-2, "
          f"{season.mean_per_plant:.4f} mol plant-1, mean fraction "
          f"{'n/a' if season.mean_fraction is None else f'{season.mean_fraction:.4f}'} -> {out}")
    return 0


def cmd_sweep(args) -> int:
    from .config import parse_location
    from .simdriver import ScenarioSpec, row_direction_report, run_sweep
    cfg = _load_cfg(args)
    out = _out_dir(args, cfg)
    sw, f = cfg.sweep, cfg.field
    spec = ScenarioSpec(
        plant=_plant(cfg),
        row_spacings=tuple(cfg.to_m(v) for v in (sw.row_spacings or [f.row_spacing])),
        plant_spacings=tuple(cfg.to_m(v) for v in (sw.plant_spacings or [f.plant_spacing])),
        orientations=tuple(cfg.orientation(o) for o in (sw.orientations or [f.orientation])),
        row_azimuths=tuple(math.radians(a) for a in (sw.row_azimuths_deg or [f.row_azimuth_deg])),
        locations=tuple(parse_location(v) for v in (sw.locations or [cfg.schedule.location])),
        rows=f.rows, plants_per_row=f.plants_per_row, ground_cell=f.ground_cell,
        radiation=cfg.radiation, schedule=cfg.schedule_obj(), sky=cfg.sky)
    print(f"sweep: {len(spec.scenarios())} scenario(s)", flush=True)
    result = run_sweep(spec, progress=lambda k, n: log.info("scenario %d/%d", k, n))
    result.to_csv(out / "sweep_season.csv")
    result.to_csv(out / "sweep_daily.csv", daily=True)
    report = row_direction_report(result)
    (out / "row_direction_report.txt").write_text(report)
    print(report, end="")
    failed = sum(r["status"] != "ok" for r in result.rows)
    print(f"sweep: {len(result.rows) - failed} ok, {failed} failed -> {out}")
    return 1 if failed else 0


def cmd_gen_plant(args) -> int:
    from .plantgen import estimate_leaf_plane_azimuth, generate_maize
    from .ply import save_ply
    cfg = _load_cfg(args)
    params = cfg.plant.params
    plant = generate_maize(params)
    target = Path(args.out) if args.out else Path(cfg.output_dir) / "plant.ply"
    if target.suffix.lower() != ".ply":
        target = target / "plant.ply"
    target.parent.mkdir(parents=True, exist_ok=True)
    save_ply(plant.mesh, target)
    meta = {
        "params": params.to_dict(),
        "leaf_plane_azimuth": plant.leaf_plane_azimuth,
        "estimated_leaf_plane_azimuth": (estimate_leaf_plane_azimuth(plant.mesh) if params.leaf_count else None),
        "total_leaf_area_m2": plant.total_leaf_area,
        "triangles": len(plant.mesh),
        "unit": "m",
    }
    target.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"gen-plant: {len(plant.mesh)} triangles, leaf area {plant.total_leaf_area:.4f} m2 -> {target}")
    return 0


def cmd_validate(args) -> int:
    from .validation import load_pairs, validate
    if not args.pairs:
        raise SystemExit("error: validate needs a pairs CSV (genotype_id, measured_fraction, simulated_fraction)")
    report = validate(load_pairs(args.pairs))
    table = report.table()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "validation.csv").write_text(table)
        (out / "r_squared.txt").write_text(repr(report.r_squared) + "\n")
    print(table, end="")
    print(f"R2 = {report.r_squared!r} over {len(report.records)} records")
    return 0


def cmd_export_field(args) -> int:
    from .field import build_field
    from .ply import save_ply
    cfg = _load_cfg(args)
    out = _out_dir(args, cfg)
    scene = build_field(cfg.layout(_plant(cfg)))
    save_ply(scene.world_mesh(), out / "field.ply")
    _write_csv(out / "plants.csv", ("plant_id", "x_m", "y_m"),
               [(pid, repr(float(p[0])), repr(float(p[1]))) for pid, p in scene.plant_positions])
    print(f"export-field: {len(scene.mesh)} triangles, {len(scene.plant_positions)} plants, "
          f"domain {scene.domain.x_extent:.4f} x {scene.domain.y_extent:.4f} m -> {out}")
    return 0


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "gen-plant": cmd_gen_plant,
            "validate": cmd_validate, "export-field": cmd_export_field}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (gen-plant: .ply path or directory)")
    common.add_argument("--seed", type=int, help="master seed; overrides the config")
    common.add_argument("--threads", type=int, help=f"worker threads (fallback ${THREADS_ENV}, then all cores)")
    common.add_argument("--unit", choices=("m", "cm", "inch"), help="length unit for spacings and PLY input")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="canopy-par", description="Canopy PAR interception by ray tracing.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "validate":
            sp.add_argument("pairs", nargs="?", help="CSV with genotype_id, measured_fraction, simulated_fraction")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _set_threads(_threads(args))
        return COMMANDS[args.command](args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
