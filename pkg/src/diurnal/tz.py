"""Timezone rules mapping UTC instants to local wall-clock time.

Three kinds of rule are supported:

* ``"europe-central"`` (alias ``"CET/CEST"``): the EU daylight-saving rule with
  UTC+1 in winter and UTC+2 from the last Sunday of March 01:00 UTC to the last
  Sunday of October 01:00 UTC.  Bundled as data, no tz database needed.
* fixed offsets such as ``"UTC"``, ``"+01:00"`` or ``"-05:30"``.
* any IANA name understood by :mod:`zoneinfo` (``"Europe/Rome"``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from functools import lru_cache
from zoneinfo import ZoneInfo

import numpy as np

_NS_PER_HOUR = 3_600_000_000_000


def _last_sunday(year: int, month: int) -> date:
    nxt = date(year + (month == 12), month % 12 + 1, 1)
    last = nxt - timedelta(days=1)
    return last - timedelta(days=(last.weekday() - 6) % 7)


class TzRule:
    """Base class. Subclasses provide ``offset_hours`` for UTC instants."""

    rule_id: str = ""

    def offset_hours(self, utc_ns: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def transition_flags(self, utc_ns: np.ndarray) -> np.ndarray:
        """True for instants within one hour after a UTC offset change."""
        utc_ns = np.asarray(utc_ns, dtype=np.int64)
        before = self.offset_hours(utc_ns - _NS_PER_HOUR)
        return before != self.offset_hours(utc_ns)

    def offset_at(self, when: datetime) -> float:
        if when.tzinfo is None:
            when = when.replace(tzinfo=timezone.utc)
        ns = np.array([int(when.timestamp()) * 1_000_000_000], dtype=np.int64)
        return float(self.offset_hours(ns)[0])

    def to_local(self, utc_ns: np.ndarray) -> np.ndarray:
        """Local wall-clock times as naive ``datetime64[ns]``."""
        utc_ns = np.asarray(utc_ns, dtype=np.int64)
        off = (self.offset_hours(utc_ns) * _NS_PER_HOUR).astype(np.int64)
        return (utc_ns + off).astype("datetime64[ns]")

    def to_utc(self, local_ns: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_local`.

        Local times in a skipped hour move forward; a repeated (fall-back) hour
        resolves to its second, standard-time occurrence.
        """
        local_ns = np.asarray(local_ns, dtype=np.int64)
        guess = local_ns - (self.offset_hours(local_ns) * _NS_PER_HOUR).astype(np.int64)
        for _ in range(2):
            guess = local_ns - (self.offset_hours(guess) * _NS_PER_HOUR).astype(np.int64)
        return guess

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.rule_id!r})"


@dataclass(frozen=True, repr=False)
class FixedOffset(TzRule):
    hours: float
    rule_id: str = "UTC"

    def offset_hours(self, utc_ns):
        return np.full(np.shape(utc_ns), float(self.hours))


@dataclass(frozen=True, repr=False)
class EUCentralRule(TzRule):
    """CET (UTC+1) with CEST (UTC+2) between the EU transition instants."""

    standard: float = 1.0
    summer: float = 2.0
    rule_id: str = "europe-central"

    @staticmethod
    @lru_cache(maxsize=None)
    def transitions(year: int) -> tuple[int, int]:
        start = datetime.combine(_last_sunday(year, 3), datetime.min.time()) + timedelta(hours=1)
        end = datetime.combine(_last_sunday(year, 10), datetime.min.time()) + timedelta(hours=1)
        to_ns = lambda d: int(d.replace(tzinfo=timezone.utc).timestamp()) * 1_000_000_000
        return to_ns(start), to_ns(end)

    def offset_hours(self, utc_ns):
        utc_ns = np.asarray(utc_ns, dtype=np.int64)
        years = utc_ns.astype("datetime64[ns]").astype("datetime64[Y]").astype(int) + 1970
        out = np.full(utc_ns.shape, self.standard)
        for year in np.unique(years):
            start, end = self.transitions(int(year))
            sel = (years == year) & (utc_ns >= start) & (utc_ns < end)
            out[sel] = self.summer
        return out


@dataclass(frozen=True, repr=False)
class ZoneInfoRule(TzRule):
    rule_id: str = "UTC"

    def offset_hours(self, utc_ns):
        utc_ns = np.asarray(utc_ns, dtype=np.int64)
        zone = ZoneInfo(self.rule_id)
        flat = utc_ns.ravel()
        secs = flat // 1_000_000_000
        # offsets change rarely: evaluate once per UTC hour
        hours, inverse = np.unique(secs // 3600, return_inverse=True)
        offs = np.array([
            datetime.fromtimestamp(int(h) * 3600, tz=zone).utcoffset().total_seconds() / 3600.0
            for h in hours
        ])
        return offs[inverse].reshape(utc_ns.shape)


_FIXED = re.compile(r"^(?:UTC)?([+-])(\d{1,2})(?::?(\d{2}))?$")


def get_tz_rule(rule: str | TzRule) -> TzRule:
    """Resolve a rule id to a :class:`TzRule`."""
    if isinstance(rule, TzRule):
        return rule
    key = rule.strip()
    if key.lower() in {"europe-central", "cet/cest", "cet-cest", "eu-central"}:
        return EUCentralRule()
    if key.upper() in {"UTC", "Z", "GMT"}:
        return FixedOffset(0.0, rule_id="UTC")
    m = _FIXED.match(key)
    if m:
        sign = 1 if m.group(1) == "+" else -1
        hours = sign * (int(m.group(2)) + int(m.group(3) or 0) / 60)
        return FixedOffset(hours, rule_id=key)
    try:
        ZoneInfo(key)
    except Exception as exc:
        raise ValueError(f"unknown timezone rule {rule!r}") from exc
    return ZoneInfoRule(rule_id=key)
