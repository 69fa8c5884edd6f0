"""JSON run configuration.

A config is an object with optional blocks ``plant``, ``field``, ``sky``,
``radiation``, ``schedule`` and ``sweep`` plus top-level ``seed``, ``unit``
and ``output_dir``. Every key is checked; anything unrecognised raises
:class:`ConfigError` naming the key and block.
"""
from __future__ import annotations

import dataclasses
import datetime as dt
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any, Dict, List, Optional

from .field import FieldLayout, OrientationMode, convert_spacing
from .plantgen import PlantParams
from .radiation import RadiationConfig
from .simdriver import Schedule
from .solar import LOCATIONS, GeoLocation, SkyModelParams

UNITS = ("m", "cm", "inch")


class ConfigError(ValueError):
    """Schema or value error in a run configuration."""


@dataclass
class FieldBlock:
    rows: int = 3
    plants_per_row: int = 15
    row_spacing: float = 0.762
    plant_spacing: float = 0.1524
    spacing_unit: Optional[str] = None
    row_azimuth_deg: float = 0.0
    orientation: str = "off_row"
    ground_cell: float = 0.1


@dataclass
class PlantBlock:
    ply: Optional[str] = None
    ply_unit: Optional[str] = None
    params: PlantParams = dc_field(default_factory=PlantParams)


@dataclass
class ScheduleBlock:
    location: Any = "ames"
    start_hour: float = 7.0
    end_hour: float = 20.0
    step_minutes: float = 60.0
    start_date: str = "2020-07-15"
    end_date: str = "2020-08-15"
    subsample: int = 1


@dataclass
class SweepBlock:
    row_spacings: Optional[List[float]] = None
    plant_spacings: Optional[List[float]] = None
    orientations: Optional[List[str]] = None
    row_azimuths_deg: Optional[List[float]] = None
    locations: Optional[List[Any]] = None


@dataclass
class RunConfig:
    seed: int = 0
    unit: str = "m"
    output_dir: str = "out"
    plant: PlantBlock = dc_field(default_factory=PlantBlock)
    field: FieldBlock = dc_field(default_factory=FieldBlock)
    sky: SkyModelParams = dc_field(default_factory=SkyModelParams)
    radiation: RadiationConfig = dc_field(default_factory=RadiationConfig)
    schedule: ScheduleBlock = dc_field(default_factory=ScheduleBlock)
    sweep: SweepBlock = dc_field(default_factory=SweepBlock)

    # -- derived objects ------------------------------------------------------------------------------

    def spacing_unit(self) -> str:
        return self.field.spacing_unit or self.unit

    def to_m(self, value: float) -> float:
        return convert_spacing(value, self.spacing_unit())

    def location(self, value=None) -> GeoLocation:
        return parse_location(self.schedule.location if value is None else value)

    def schedule_obj(self) -> Schedule:
        s = self.schedule
        return Schedule(self.location(), s.start_hour, s.end_hour, s.step_minutes,
                        _date(s.start_date, "schedule.start_date"), _date(s.end_date, "schedule.end_date"),
                        s.subsample)

    def orientation(self, value=None) -> OrientationMode:
        mode = OrientationMode.parse(self.field.orientation if value is None else value)
        if mode.kind.value == "random" and ":" not in str(value if value is not None else self.field.orientation):
            mode = dataclasses.replace(mode, seed=self.seed)
        return mode

    def layout(self, plant_source) -> FieldLayout:
        f = self.field
        return FieldLayout(plant_source, f.rows, f.plants_per_row, self.to_m(f.row_spacing),
                           self.to_m(f.plant_spacing), math.radians(f.row_azimuth_deg), self.orientation(),
                           f.ground_cell).validate()


def parse_location(value) -> GeoLocation:
    if isinstance(value, str):
        if value not in LOCATIONS:
            raise ConfigError(f"unknown location {value!r}; known: {sorted(LOCATIONS)}")
        return LOCATIONS[value]
    if isinstance(value, dict):
        _check_keys(value, {"latitude", "longitude", "utc_offset", "name"}, "location")
        try:
            return GeoLocation(**value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"location: {exc}") from None
    raise ConfigError("location must be a site name or an object")


def _date(text, where) -> dt.date:
    try:
        return dt.date.fromisoformat(str(text))
    except ValueError:
        raise ConfigError(f"{where}: expected an ISO date, got {text!r}") from None


def _check_keys(data: dict, allowed, block: str):
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in block {block!r}")


def _build(cls, data, block: str):
    if not isinstance(data, dict):
        raise ConfigError(f"block {block!r} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    _check_keys(data, names, block)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{block}: {exc}") from None


def config_from_dict(data: Dict[str, Any]) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    top = {"seed", "unit", "output_dir", "plant", "field", "sky", "radiation", "schedule", "sweep"}
    _check_keys(data, top, "<root>")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    unit = data.get("unit", "m")
    if unit not in UNITS:
        raise ConfigError(f"unit must be one of {UNITS}")

    if not isinstance(data.get("plant", {}), dict):
        raise ConfigError("block 'plant' must be an object")
    plant_data = dict(data.get("plant", {}))
    ply = plant_data.pop("ply", None)
    ply_unit = plant_data.pop("ply_unit", None)
    if ply_unit is not None and ply_unit not in UNITS + ("mm",):
        raise ConfigError(f"plant.ply_unit must be one of {UNITS + ('mm',)}")
    plant_data.setdefault("seed", seed)
    params = _build(PlantParams, plant_data, "plant")
    try:
        params.validate()
    except ValueError as exc:
        raise ConfigError(f"plant: {exc}") from None

    rad_data = dict(data.get("radiation", {}))
    rad_data.setdefault("rng_seed", seed)
    radiation = _build(RadiationConfig, rad_data, "radiation")
    try:
        radiation.validate()
    except ValueError as exc:
        raise ConfigError(f"radiation: {exc}") from None

    cfg = RunConfig(
        seed=seed, unit=unit, output_dir=str(data.get("output_dir", "out")),
        plant=PlantBlock(ply, ply_unit, params),
        field=_build(FieldBlock, data.get("field", {}), "field"),
        sky=_build(SkyModelParams, data.get("sky", {}), "sky"),
        radiation=radiation,
        schedule=_build(ScheduleBlock, data.get("schedule", {}), "schedule"),
        sweep=_build(SweepBlock, data.get("sweep", {}), "sweep"),
    )
    if cfg.field.spacing_unit is not None and cfg.field.spacing_unit not in UNITS:
        raise ConfigError(f"field.spacing_unit must be one of {UNITS}")
    # surface value errors now rather than mid-run
    try:
        cfg.schedule_obj()
        cfg.orientation()
        cfg.to_m(cfg.field.row_spacing)
        cfg.to_m(cfg.field.plant_spacing)
        for o in cfg.sweep.orientations or ():
            cfg.orientation(o)
        for v in (cfg.sweep.row_spacings or []) + (cfg.sweep.plant_spacings or []):
            cfg.to_m(v)
        for loc in cfg.sweep.locations or ():
            parse_location(loc)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)
