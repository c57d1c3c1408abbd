"""Geometric sunrise and sunset and the day/night boundaries derived from them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone

import numpy as np
import pandas as pd

from .tz import TzRule, get_tz_rule

ZENITH_DEG = 90.833

NORMAL, POLAR_DAY, POLAR_NIGHT = "normal", "polar_day", "polar_night"


@dataclass(frozen=True)
class SunTimes:
    date: date
    lat: float
    lon: float
    sunrise: float | None
    sunset: float | None
    flag: str = NORMAL

    @property
    def day_length(self) -> float:
        if self.flag == POLAR_DAY:
            return 24.0
        if self.flag == POLAR_NIGHT:
            return 0.0
        return (self.sunset - self.sunrise) % 24.0

    def as_row(self) -> dict:
        return dict(date=self.date.isoformat(), lat=self.lat, lon=self.lon,
                    sunrise=self.sunrise, sunset=self.sunset, flag=self.flag)


def _geometry(day_of_year: int, year_days: int, utc_hour: float) -> tuple[float, float]:
    """Equation of time (minutes) and declination (radians) from the fractional year."""
    g = 2 * math.pi / year_days * (day_of_year - 1 + (utc_hour - 12) / 24)
    eqtime = 229.18 * (0.000075 + 0.001868 * math.cos(g) - 0.032077 * math.sin(g)
                       - 0.014615 * math.cos(2 * g) - 0.040849 * math.sin(2 * g))
    decl = (0.006918 - 0.399912 * math.cos(g) + 0.070257 * math.sin(g)
            - 0.006758 * math.cos(2 * g) + 0.000907 * math.sin(2 * g)
            - 0.002697 * math.cos(3 * g) + 0.00148 * math.sin(3 * g))
    return eqtime, decl


def _event_utc_minutes(lat: float, lon: float, d: date, rising: bool):
    """UTC minutes after midnight of sunrise/sunset, or a polar flag."""
    doy = d.timetuple().tm_yday
    year_days = 366 if (d.year % 4 == 0 and (d.year % 100 != 0 or d.year % 400 == 0)) else 365
    phi = math.radians(lat)
    utc_hour = 12.0
    minutes = None
    for _ in range(2):  # refine with the geometry at the estimated event time
        eqtime, decl = _geometry(doy, year_days, utc_hour)
        cos_ha = (math.cos(math.radians(ZENITH_DEG)) / (math.cos(phi) * math.cos(decl))
                  - math.tan(phi) * math.tan(decl)) if abs(lat) < 90 else (
                      -math.inf if (lat > 0) == (decl > 0) else math.inf)
        if cos_ha < -1:
            return POLAR_DAY
        if cos_ha > 1:
            return POLAR_NIGHT
        ha = math.degrees(math.acos(cos_ha))
        minutes = 720 - 4 * (lon + (ha if rising else -ha)) - eqtime
        utc_hour = minutes / 60
    return minutes


def _to_local_hours(d: date, utc_minutes: float, rule: TzRule) -> float:
    instant = datetime(d.year, d.month, d.day, tzinfo=timezone.utc) + timedelta(minutes=utc_minutes)
    offset = rule.offset_at(instant)
    return (utc_minutes / 60 + offset) % 24.0


def sun_times(lat: float, lon: float, day: date, tz_rule="europe-central") -> SunTimes:
    """Sunrise and sunset (local wall-clock hours) for a calendar date.

    Uses the fractional-year approximation for the equation of time and the
    solar declination and a zenith of 90.833 degrees (refraction plus the
    solar radius).
    """
    if not (-90 <= lat <= 90 and -180 <= lon <= 180):
        raise ValueError(f"coordinates out of range: {lat}, {lon}")
    rule = get_tz_rule(tz_rule)
    rise = _event_utc_minutes(lat, lon, day, True)
    setting = _event_utc_minutes(lat, lon, day, False)
    for ev in (rise, setting):
        if isinstance(ev, str):
            return SunTimes(day, lat, lon, None, None, ev)
    return SunTimes(day, lat, lon, _to_local_hours(day, rise, rule), _to_local_hours(day, setting, rule))


def round_quarter(hours: float) -> float:
    """Nearest quarter hour (halves round up)."""
    return math.floor(hours * 4 + 0.5) / 4


def monthly_boundaries(lat: float, lon: float, month: date | tuple[int, int],
                       tz_rule="europe-central") -> tuple[float, float]:
    """Sunrise and sunset on the first day of ``month``, rounded to the quarter hour."""
    first = date(month[0], month[1], 1) if isinstance(month, tuple) else month.replace(day=1)
    st = sun_times(lat, lon, first, tz_rule)
    if st.flag != NORMAL:
        raise ValueError(f"{st.flag} on {first} at ({lat}, {lon})")
    return round_quarter(st.sunrise), round_quarter(st.sunset)


def months_in_span(span: tuple[date, date]) -> list[date]:
    lo, hi = span
    return [p.to_timestamp().date() for p in pd.period_range(pd.Period(lo, "M"), pd.Period(hi, "M"), freq="M")]


def monthly_table(lat: float, lon: float, span: tuple[date, date], tz_rule="europe-central") -> pd.DataFrame:
    """First-of-month sun times over a span, CSV layout ``date,lat,lon,sunrise,sunset,flag``."""
    rows = [sun_times(lat, lon, d, tz_rule).as_row() for d in months_in_span(span)]
    return pd.DataFrame(rows, columns=["date", "lat", "lon", "sunrise", "sunset", "flag"])


def average_boundaries(lat: float, lon: float, span: tuple[date, date],
                       tz_rule="europe-central") -> tuple[float, float]:
    """Mean first-of-month sunrise and sunset over a span, rounded to the quarter hour."""
    table = monthly_table(lat, lon, span, tz_rule)
    if (table["flag"] != NORMAL).any():
        raise ValueError("polar conditions inside the span")
    return round_quarter(float(np.mean(table["sunrise"]))), round_quarter(float(np.mean(table["sunset"])))


def format_clock(hours: float) -> str:
    """``6.5 -> '6:30 am'``, ``18.75 -> '6:45 pm'``."""
    minutes = int(round(hours * 60)) % (24 * 60)
    h, m = divmod(minutes, 60)
    suffix = "am" if h < 12 else "pm"
    return f"{(h - 1) % 12 + 1}:{m:02d} {suffix}"


def format_boundaries(boundaries: tuple[float, float]) -> str:
    return f"{format_clock(boundaries[0])}–{format_clock(boundaries[1])}"
