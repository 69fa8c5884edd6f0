"""Time integration over days and seasons, and scenario sweeps."""
from __future__ import annotations

import csv
import datetime as dt
import io
import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .field import FieldLayout, OrientationMode, SceneField, build_field
from .plantgen import PlantModel
from .radiation import (FluxMap, RadiationConfig, SensorReading, SensorSpec, compute_flux,
                        default_sensors, per_plant_interception, read_sensors)
from .rng import hash4, seed_to_int
from .solar import AMES, GeoLocation, SkyModelParams, SolarState, TimePoint, solar_state

log = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600.0
UMOL_PER_MOL = 1e6


@dataclass(frozen=True)
class Schedule:
    location: GeoLocation = AMES
    start_hour: float = 7.0
    end_hour: float = 20.0
    step_minutes: float = 60.0
    start_date: dt.date = dt.date(2020, 7, 15)
    end_date: dt.date = dt.date(2020, 8, 15)
    subsample: int = 1

    def __post_init__(self):
        if not self.start_hour < self.end_hour:
            raise ValueError("start_hour must be before end_hour")
        if not self.step_minutes > 0:
            raise ValueError("step_minutes must be > 0")
        if self.end_date < self.start_date:
            raise ValueError("end_date precedes start_date")
        if self.subsample < 1:
            raise ValueError("subsample must be >= 1")

    def hours(self) -> np.ndarray:
        """Sample times; a final partial step ends exactly at ``end_hour``."""
        step = self.step_minutes / 60.0
        n = int(math.floor((self.end_hour - self.start_hour) / step + 1e-9))
        h = self.start_hour + step * np.arange(n + 1)
        if self.end_hour - h[-1] > 1e-9:
            h = np.append(h, self.end_hour)
        return h

    def all_dates(self) -> List[dt.date]:
        n = (self.end_date - self.start_date).days + 1
        return [self.start_date + dt.timedelta(days=k) for k in range(n)]

    def dates(self) -> List[dt.date]:
        return self.all_dates()[::self.subsample]


@dataclass
class TimepointResult:
    time: TimePoint
    sun: SolarState
    plant_power: Dict[int, float]
    per_ground_area: float
    sensors: Optional[SensorReading]
    flux: Optional[FluxMap] = None


@dataclass
class DailyResult:
    date: dt.date
    hours: np.ndarray
    timepoints: List[TimepointResult]
    per_plant: Dict[int, float]
    per_ground_area: float

    @property
    def fractions(self) -> List[Optional[float]]:
        return [tp.sensors.fraction_intercepted if tp.sensors else None for tp in self.timepoints]

    @property
    def mean_fraction(self) -> Optional[float]:
        vals = [f for f in self.fractions if f is not None]
        return float(np.mean(vals)) if vals else None

    @property
    def mean_per_plant(self) -> float:
        return float(np.mean(list(self.per_plant.values()))) if self.per_plant else 0.0

    def midday(self) -> TimepointResult:
        """Timepoint with the smallest solar zenith (instantaneous comparison value)."""
        return min(self.timepoints, key=lambda tp: tp.sun.zenith)


@dataclass
class SeasonalResult:
    days: List[DailyResult]
    scale: float
    per_plant: Dict[int, float]
    per_ground_area: float

    @property
    def mean_fraction(self) -> Optional[float]:
        vals = [f for d in self.days for f in d.fractions if f is not None]
        return float(np.mean(vals)) if vals else None

    @property
    def mean_per_plant(self) -> float:
        return float(np.mean(list(self.per_plant.values()))) if self.per_plant else 0.0


def integrate_day(hours, values) -> float:
    """Trapezoidal integral of a umol s-1 series over clock hours, in mol."""
    hours = np.asarray(hours, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(hours) < 2:
        return 0.0
    return float(np.trapezoid(values, hours * SECONDS_PER_HOUR)) / UMOL_PER_MOL


def timepoint_seed(seed: int, t: TimePoint) -> int:
    """Per-timepoint seed so Monte Carlo errors are independent across a season."""
    return int(hash4(seed_to_int(seed), 0x7133, t.date.toordinal(), int(round(t.hours * 3600)), 0))


def run_timepoint(scene: SceneField, loc: GeoLocation, t: TimePoint, cfg: RadiationConfig = RadiationConfig(),
                  sky: SkyModelParams = SkyModelParams(), sensors: Optional[Sequence[SensorSpec]] = None,
                  keep_flux: bool = False) -> TimepointResult:
    sun = solar_state(loc, t, sky)
    cfg = replace(cfg, rng_seed=timepoint_seed(cfg.rng_seed, t))
    flux = compute_flux(scene, sun, cfg)
    interception = per_plant_interception(flux, scene)
    reading = None
    if sensors:
        reading = read_sensors(scene, sun, flux, sensors, cfg) if sun.sun_up else \
            SensorReading({s.sensor_id: 0.0 for s in sensors}, None, None)
    return TimepointResult(t, sun, interception.power, interception.per_ground_area, reading,
                           flux if keep_flux else None)


def run_day(scene: SceneField, schedule: Schedule, date: dt.date, cfg: RadiationConfig = RadiationConfig(),
            sky: SkyModelParams = SkyModelParams(), sensors: Optional[Sequence[SensorSpec]] = None,
            keep_flux: bool = False) -> DailyResult:
    """Integrate intercepted PAR over the daily window."""
    hours = schedule.hours()
    tps = [run_timepoint(scene, schedule.location, TimePoint.at(date, h), cfg, sky, sensors, keep_flux)
           for h in hours]
    ids = sorted(tps[0].plant_power)
    per_plant = {pid: integrate_day(hours, [tp.plant_power[pid] for tp in tps]) for pid in ids}
    per_area = integrate_day(hours, [tp.per_ground_area for tp in tps])
    return DailyResult(date, hours, tps, per_plant, per_area)


def run_season(scene: SceneField, schedule: Schedule = Schedule(), cfg: RadiationConfig = RadiationConfig(),
               sky: SkyModelParams = SkyModelParams(), sensors: Optional[Sequence[SensorSpec]] = None,
               keep_flux: bool = False) -> SeasonalResult:
    """Run every (sub-sampled) date; with ``subsample > 1`` totals are scaled by
    ``n_dates / n_sampled``, an approximation that assumes the skipped days
    resemble the simulated ones."""
    dates = schedule.dates()
    days = [run_day(scene, schedule, d, cfg, sky, sensors, keep_flux) for d in dates]
    scale = len(schedule.all_dates()) / len(dates)
    ids = sorted(days[0].per_plant)
    per_plant = {}
    for pid in ids:
        total = 0.0
        for d in days:
            total += d.per_plant[pid]
        per_plant[pid] = total * scale if scale != 1.0 else total
    area = 0.0
    for d in days:
        area += d.per_ground_area
    return SeasonalResult(days, scale, per_plant, area * scale if scale != 1.0 else area)


# -- sweeps ------------------------------------------------------------------------------------------

SWEEP_AXES = ("location", "row_spacing_m", "plant_spacing_m", "orientation", "row_azimuth_deg")
SWEEP_HEADER = SWEEP_AXES + ("date", "par_per_ground_area_mol_m2", "par_per_plant_mol",
                             "mean_fraction_intercepted", "status")


@dataclass(frozen=True)
class ScenarioSpec:
    plant: Union[PlantModel, Sequence[PlantModel]]
    row_spacings: Sequence[float] = (30 * 0.0254,)
    plant_spacings: Sequence[float] = (6 * 0.0254,)
    orientations: Sequence[OrientationMode] = (OrientationMode.parse("off_row"),)
    row_azimuths: Sequence[float] = (0.0,)
    locations: Sequence[GeoLocation] = (AMES,)
    rows: int = 3
    plants_per_row: int = 15
    ground_cell: float = 0.1
    radiation: RadiationConfig = RadiationConfig()
    schedule: Schedule = Schedule()
    sky: SkyModelParams = SkyModelParams()
    with_sensors: bool = True

    def scenarios(self):
        axes = (self.locations, self.row_spacings, self.plant_spacings, self.orientations, self.row_azimuths)
        if any(len(a) == 0 for a in axes):
            raise ValueError("every sweep axis needs at least one value")
        return list(itertools.product(*axes))

    def layout(self, row_spacing, plant_spacing, orientation, row_azimuth) -> FieldLayout:
        return FieldLayout(self.plant, self.rows, self.plants_per_row, row_spacing, plant_spacing,
                           row_azimuth, OrientationMode.parse(orientation), self.ground_cell)


@dataclass
class SweepResult:
    """``rows`` has one SEASON row per scenario; ``daily_rows`` one row per simulated date."""

    rows: List[dict]
    daily_rows: List[dict] = field(default_factory=list)
    seasons: Dict[tuple, SeasonalResult] = field(default_factory=dict)

    def to_csv(self, path=None, daily: bool = False) -> str:
        return write_table(self.daily_rows if daily else self.rows, path)


def write_table(rows: Sequence[dict], path=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_HEADER, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def axis_values(loc, rs, ps, orient, raz):
    return {
        "location": loc.name or f"{loc.latitude:.4f},{loc.longitude:.4f}",
        "row_spacing_m": repr(float(rs)),
        "plant_spacing_m": repr(float(ps)),
        "orientation": OrientationMode.parse(orient).label,
        "row_azimuth_deg": repr(round(math.degrees(raz), 10)),
    }


def _fmt(x):
    return "" if x is None else repr(float(x))


def daily_rows(axes: dict, season: SeasonalResult) -> List[dict]:
    return [{**axes, "date": d.date.isoformat(), "par_per_ground_area_mol_m2": _fmt(d.per_ground_area),
             "par_per_plant_mol": _fmt(d.mean_per_plant), "mean_fraction_intercepted": _fmt(d.mean_fraction),
             "status": "ok"} for d in season.days]


def season_row(axes: dict, season: SeasonalResult) -> dict:
    return {**axes, "date": "SEASON", "par_per_ground_area_mol_m2": _fmt(season.per_ground_area),
            "par_per_plant_mol": _fmt(season.mean_per_plant),
            "mean_fraction_intercepted": _fmt(season.mean_fraction), "status": "ok"}


def run_sweep(spec: ScenarioSpec, progress=None) -> SweepResult:
    """Run the Cartesian product of the sweep axes in lexicographic axis order.

    A failing scenario yields a single row whose ``status`` holds the error.
    """
    combos = spec.scenarios()
    log.info("sweep: %d scenarios", len(combos))
    if progress:
        progress(0, len(combos))
    out = SweepResult([])
    for n, (loc, rs, ps, orient, raz) in enumerate(combos):
        axes = axis_values(loc, rs, ps, orient, raz)
        try:
            scene = build_field(spec.layout(rs, ps, orient, raz))
            sensors = default_sensors(scene) if spec.with_sensors else None
            season = run_season(scene, replace(spec.schedule, location=loc), spec.radiation, spec.sky, sensors)
        except Exception as exc:  # recorded per row so the sweep continues
            log.exception("scenario %s failed", axes)
            out.rows.append({**axes, "date": "SEASON", "par_per_ground_area_mol_m2": "", "par_per_plant_mol": "",
                             "mean_fraction_intercepted": "", "status": f"error: {exc}"})
            continue
        out.seasons[tuple(axes.values())] = season
        out.daily_rows.extend(daily_rows(axes, season))
        out.rows.append(season_row(axes, season))
        if progress:
            progress(n + 1, len(combos))
    return out


COMPASS = {0.0: "N-S", 90.0: "E-W", 45.0: "NE-SW", 135.0: "NW-SE"}


def row_direction_report(result: SweepResult) -> str:
    """Rank row directions by seasonal PAR per ground area (one block per other-axis combination)."""
    groups: Dict[tuple, list] = {}
    for r in result.rows:
        if r["status"] != "ok":
            continue
        key = (r["location"], r["row_spacing_m"], r["plant_spacing_m"], r["orientation"])
        groups.setdefault(key, []).append(r)
    lines = []
    for key, rows in groups.items():
        rows = sorted(rows, key=lambda r: -float(r["par_per_ground_area_mol_m2"]))
        lines.append("location={} row_spacing_m={} plant_spacing_m={} orientation={}".format(*key))
        for rank, r in enumerate(rows, 1):
            deg = float(r["row_azimuth_deg"]) % 180.0
            name = COMPASS.get(round(deg, 6), f"{deg:g} deg")
            lines.append(f"  {rank}. {name:<8} {float(r['par_per_ground_area_mol_m2']):.4f} mol m-2 season")
        top2 = {COMPASS.get(round(float(r["row_azimuth_deg"]) % 180.0, 6)) for r in rows[:2]}
        if {"NE-SW", "NW-SE"} <= {COMPASS.get(round(float(r["row_azimuth_deg"]) % 180.0, 6)) for r in rows}:
            verdict = "yes" if top2 == {"NE-SW", "NW-SE"} else "no"
            lines.append(f"  diagonal rows (NE-SW, NW-SE) ranked top two: {verdict}")
    return "\n".join(lines) + "\n"
