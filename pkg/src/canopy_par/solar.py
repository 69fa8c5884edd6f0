"""Sun position and clear-sky PAR.

Position follows the NOAA solar calculator formulation (Meeus low-precision
series): declination and the equation of time from Julian centuries, hour
angle from local clock time, longitude and a fixed UTC offset. No daylight
saving logic is applied.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GeoLocation:
    latitude: float
    longitude: float
    utc_offset: float = 0.0
    name: str = ""

    def __post_init__(self):
        if abs(self.latitude) > 90 or abs(self.longitude) > 180:
            raise ValueError("latitude must be within +-90 and longitude within +-180 degrees")


# Summer wall-clock offsets (UTC-5, central daylight time) for the three sites.
AMES = GeoLocation(42.0308, -93.6319, -5.0, "ames")
THOMAS_COUNTY = GeoLocation(39.3508, -101.0510, -5.0, "thomas_county")
BISMARCK = GeoLocation(46.8083, -100.7837, -5.0, "bismarck")
LOCATIONS = {loc.name: loc for loc in (AMES, THOMAS_COUNTY, BISMARCK)}


@dataclass(frozen=True)
class TimePoint:
    date: dt.date
    hour: int
    minute: float = 0.0

    @classmethod
    def at(cls, date, hours: float) -> "TimePoint":
        h = int(math.floor(hours))
        return cls(date, h, (hours - h) * 60.0)

    @property
    def hours(self) -> float:
        return self.hour + self.minute / 60.0

    def isoformat(self) -> str:
        total = int(round(self.hours * 3600))
        return f"{self.date.isoformat()}T{total // 3600:02d}:{total // 60 % 60:02d}:{total % 60:02d}"


@dataclass(frozen=True)
class SkyModelParams:
    extraterrestrial_par: float = 2400.0
    atmospheric_transmittance: float = 0.75
    diffuse_coefficient: float = 0.3

    def __post_init__(self):
        if not self.extraterrestrial_par > 0:
            raise ValueError("extraterrestrial_par must be > 0")
        if not 0 < self.atmospheric_transmittance < 1:
            raise ValueError("atmospheric_transmittance must lie in (0, 1)")
        if self.diffuse_coefficient < 0:
            raise ValueError("diffuse_coefficient must be >= 0")


@dataclass(frozen=True)
class SolarState:
    zenith: float
    azimuth: float
    direct_normal_par: float = 0.0
    diffuse_horizontal_par: float = 0.0

    @property
    def sun_up(self) -> bool:
        return self.zenith < np.pi / 2

    @property
    def direction(self) -> np.ndarray:
        """Unit vector from the ground toward the sun (world frame)."""
        s = math.sin(self.zenith)
        return np.array([s * math.sin(self.azimuth), s * math.cos(self.azimuth), math.cos(self.zenith)])


def julian_day(date: dt.date, hours_local: float, utc_offset: float) -> float:
    return date.toordinal() + 1721424.5 + (hours_local - utc_offset) / 24.0


def _refraction_deg(elev):
    if elev > 85.0:
        return 0.0
    te = math.tan(math.radians(elev))
    if elev > 5.0:
        r = 58.1 / te - 0.07 / te ** 3 + 0.000086 / te ** 5
    elif elev > -0.575:
        r = 1735.0 + elev * (-518.2 + elev * (103.4 + elev * (-12.79 + elev * 0.711)))
    else:
        r = -20.772 / te
    return r / 3600.0


def solar_position(loc: GeoLocation, t: TimePoint, refraction: bool = True):
    """Return ``(zenith, azimuth)`` in radians; azimuth clockwise from north."""
    jc = (julian_day(t.date, t.hours, loc.utc_offset) - 2451545.0) / 36525.0
    l0 = (280.46646 + jc * (36000.76983 + jc * 0.0003032)) % 360.0
    m = 357.52911 + jc * (35999.05029 - 0.0001537 * jc)
    ecc = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc)
    mr = math.radians(m)
    center = (math.sin(mr) * (1.914602 - jc * (0.004817 + 0.000014 * jc))
              + math.sin(2 * mr) * (0.019993 - 0.000101 * jc)
              + math.sin(3 * mr) * 0.000289)
    omega = math.radians(125.04 - 1934.136 * jc)
    app_long = math.radians(l0 + center - 0.00569 - 0.00478 * math.sin(omega))
    obliq0 = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0
    obliq = math.radians(obliq0 + 0.00256 * math.cos(omega))
    decl = math.asin(math.sin(obliq) * math.sin(app_long))

    y = math.tan(obliq / 2) ** 2
    l0r = math.radians(l0)
    eot = 4.0 * math.degrees(
        y * math.sin(2 * l0r) - 2 * ecc * math.sin(mr) + 4 * ecc * y * math.sin(mr) * math.cos(2 * l0r)
        - 0.5 * y * y * math.sin(4 * l0r) - 1.25 * ecc * ecc * math.sin(2 * mr))
    true_solar_min = t.hours * 60.0 + eot + 4.0 * loc.longitude - 60.0 * loc.utc_offset
    hour_angle = math.radians(true_solar_min / 4.0 - 180.0)

    lat = math.radians(loc.latitude)
    cosz = math.sin(lat) * math.sin(decl) + math.cos(lat) * math.cos(decl) * math.cos(hour_angle)
    zenith = math.acos(min(1.0, max(-1.0, cosz)))
    azimuth = math.atan2(-math.cos(decl) * math.sin(hour_angle),
                         math.sin(decl) * math.cos(lat) - math.cos(decl) * math.sin(lat) * math.cos(hour_angle))
    if refraction:
        zenith -= math.radians(_refraction_deg(90.0 - math.degrees(zenith)))
    return zenith, azimuth % (2 * math.pi)


def airmass(zenith: float) -> float:
    """Kasten-Young relative optical air mass."""
    zd = math.degrees(zenith)
    return 1.0 / (math.cos(zenith) + 0.50572 * (96.07995 - zd) ** -1.6364)


def clear_sky_par(zenith: float, params: SkyModelParams = SkyModelParams()):
    """``(direct_normal, diffuse_horizontal)`` PAR in umol m-2 s-1."""
    if not 0.0 <= zenith <= math.pi:
        raise ValueError("zenith must lie in [0, pi]")
    if zenith >= math.pi / 2:
        return 0.0, 0.0
    trans = params.atmospheric_transmittance ** airmass(zenith)
    s0 = params.extraterrestrial_par
    return s0 * trans, params.diffuse_coefficient * s0 * (1.0 - trans) * math.cos(zenith)


def solar_state(loc: GeoLocation, t: TimePoint, sky: SkyModelParams = SkyModelParams()) -> SolarState:
    zenith, azimuth = solar_position(loc, t)
    direct, diffuse = clear_sky_par(min(zenith, math.pi), sky)
    return SolarState(zenith, azimuth, direct, diffuse)
