"""Synthetic posting populations with planted chronotypes and content propensities.

Posting times of day come from per-population mixtures of von Mises
components on the 24-hour circle.  Content categories are drawn per post
from a time-of-day dependent propensity, optionally with a surge of the
disinformative categories inside a clock window.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Mapping

import numpy as np
import pandas as pd

from .ingest import (ALL_CATEGORIES, CATEGORY_CODES, DEFAULT_SPAN, DISINFORMATIVE, N_BINS,
                     ContentCategory, PostTable, _normalise_frame)
from .tz import get_tz_rule

DEFAULT_PROPENSITY = {
    "Science": 0.05, "MainstreamMedia": 0.35, "Satire": 0.02, "Clickbait": 0.05,
    "Other": 0.35, "Political": 0.08, "FakeOrHoax": 0.04, "ConspiracyJunkScience": 0.06,
}
LOCKDOWN = (date(2020, 3, 9), date(2020, 5, 18))
_KINDS = ("tweet", "retweet", "reply")
_KIND_P = (0.5, 0.4, 0.1)


@dataclass(frozen=True)
class Peak:
    """Von Mises component on the clock; ``kappa=0`` is a uniform floor."""

    hour: float
    kappa: float
    weight: float = 1.0


@dataclass(frozen=True)
class Surge:
    """Multiplier on the disinformative propensities around a clock window.

    ``shape="box"`` applies ``factor`` to bins starting in ``[start, end)``;
    ``shape="vonmises"`` ramps smoothly up to ``factor`` at the window centre
    with concentration ``kappa``.
    """

    start: float = 2.5
    end: float = 4.25
    factor: float = 2.0
    shape: str = "box"
    kappa: float = 2.0

    @property
    def centre(self) -> float:
        return (self.start + ((self.end - self.start) % 24) / 2) % 24

    def profile(self) -> np.ndarray:
        """Multiplier per bin (1 outside the surge)."""
        h = np.arange(N_BINS) / 4
        if self.shape == "box":
            inside = ((h - self.start) % 24) < ((self.end - self.start) % 24)
            return np.where(inside, self.factor, 1.0)
        if self.shape == "vonmises":
            ang = 2 * np.pi * ((h + 0.125) - self.centre) / 24
            bump = np.exp(self.kappa * (np.cos(ang) - 1))
            return 1.0 + (self.factor - 1.0) * bump
        raise ValueError(f"unknown surge shape {self.shape!r}")


@dataclass(frozen=True)
class PopulationSpec:
    name: str
    size: int
    posts_per_user: tuple[int, int]
    peaks: tuple[Peak, ...]
    propensity: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_PROPENSITY))
    surge: Surge | None = None
    user_jitter_hours: float = 0.5
    lockdown_activity: float = 1.0
    lockdown_disinfo: float = 1.0

    def validate(self) -> None:
        if self.size < 1:
            raise ValueError(f"population {self.name!r}: size must be >= 1")
        lo, hi = self.posts_per_user
        if not 1 <= lo <= hi:
            raise ValueError(f"population {self.name!r}: bad posts_per_user {self.posts_per_user}")
        if not self.peaks or any(p.kappa < 0 or p.weight <= 0 for p in self.peaks):
            raise ValueError(f"population {self.name!r}: peaks need kappa >= 0 and positive weight")
        probs = self.base_propensity()
        if (probs < 0).any() or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"population {self.name!r}: propensities must be >= 0 and sum to 1")
        if self.lockdown_activity <= 0 or self.lockdown_disinfo <= 0:
            raise ValueError("lockdown multipliers must be positive")

    def base_propensity(self) -> np.ndarray:
        p = np.zeros(len(ALL_CATEGORIES))
        for k, v in self.propensity.items():
            p[CATEGORY_CODES[ContentCategory.parse(k)]] = float(v)
        return p

    def propensity_by_bin(self, disinfo_factor: float = 1.0) -> np.ndarray:
        """``(96, n_categories)`` category probabilities per local bin."""
        base = self.base_propensity()
        mult = np.ones(N_BINS) if self.surge is None else self.surge.profile()
        mult = mult * disinfo_factor
        dis = np.zeros(len(ALL_CATEGORIES), dtype=bool)
        for c in DISINFORMATIVE:
            dis[CATEGORY_CODES[c]] = True
        p = np.where(dis[None, :], base[None, :] * mult[:, None], base[None, :])
        return p / p.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class SynthSpec:
    populations: tuple[PopulationSpec, ...]
    span: tuple[date, date] = DEFAULT_SPAN
    tz_rule: str = "europe-central"
    lockdown: tuple[date, date] = LOCKDOWN

    def validate(self) -> None:
        if not self.populations:
            raise ValueError("at least one population required")
        names = [p.name for p in self.populations]
        if len(set(names)) != len(names):
            raise ValueError("population names must be unique")
        if self.span[1] < self.span[0]:
            raise ValueError("empty span")
        for p in self.populations:
            p.validate()

    @classmethod
    def from_dict(cls, data: Mapping) -> "SynthSpec":
        pops = []
        for p in data["populations"]:
            surge = p.get("surge")
            pops.append(PopulationSpec(
                name=p["name"], size=int(p["size"]),
                posts_per_user=tuple(int(v) for v in p["posts_per_user"]),
                peaks=tuple(Peak(*pk) if not isinstance(pk, Mapping) else Peak(**pk) for pk in p["peaks"]),
                propensity=dict(p.get("propensity", DEFAULT_PROPENSITY)),
                surge=Surge(**surge) if surge else None,
                user_jitter_hours=float(p.get("user_jitter_hours", 0.5)),
                lockdown_activity=float(p.get("lockdown_activity", 1.0)),
                lockdown_disinfo=float(p.get("lockdown_disinfo", 1.0)),
            ))
        kw = {}
        for key in ("span", "lockdown"):
            if key in data:
                kw[key] = tuple(v if isinstance(v, date) else date.fromisoformat(v) for v in data[key])
        if "tz_rule" in data:
            kw["tz_rule"] = data["tz_rule"]
        return cls(tuple(pops), **kw)


# one planted peak per chronotype plus a flat floor (kappa 0) so nights are never empty
CHRONOTYPE_PEAKS = {
    "morning": (Peak(9.25, 4.0, 0.85), Peak(0.0, 0.0, 0.15)),
    "intermediate": (Peak(12.0, 4.0, 0.85), Peak(0.0, 0.0, 0.15)),
    "evening": (Peak(22.25, 4.0, 0.85), Peak(0.0, 0.0, 0.15)),
}


def default_spec(users_per_population: int = 300, posts_per_user: tuple[int, int] = (300, 400),
                 infrequent_users: int = 0, infrequent_posts: tuple[int, int] = (5, 120),
                 surge: Surge | None = None, lockdown_activity: float = 1.0,
                 span=DEFAULT_SPAN) -> SynthSpec:
    """Three chronotype populations, optionally plus an infrequent one."""
    pops = [PopulationSpec(name, users_per_population, posts_per_user, peaks, surge=surge,
                           lockdown_activity=lockdown_activity)
            for name, peaks in CHRONOTYPE_PEAKS.items()]
    if infrequent_users:
        pops.append(PopulationSpec("infrequent", infrequent_users, infrequent_posts,
                                   (Peak(11.0, 2.0, 0.45), Peak(20.0, 2.0, 0.4), Peak(0.0, 0.0, 0.15)), surge=surge,
                                   lockdown_activity=lockdown_activity))
    return SynthSpec(tuple(pops), span=span)


@dataclass(frozen=True)
class SynthResult:
    table: PostTable
    labels: pd.Series  # population name per user, indexed by user id

    def label_codes(self, users) -> np.ndarray:
        names = sorted(self.labels.unique())
        return np.array([names.index(self.labels[u]) for u in users])


def synth_generate(spec: SynthSpec, seed: int = 0) -> SynthResult:
    """Draw a post table from ``spec``; identical for identical ``(spec, seed)``."""
    spec.validate()
    rule = get_tz_rule(spec.tz_rule)
    lo, hi = spec.span
    n_days = (hi - lo).days + 1
    day_ns = (np.datetime64(lo, "D") + np.arange(n_days)).astype("datetime64[ns]").astype(np.int64)
    days = np.array([lo + timedelta(days=int(i)) for i in range(n_days)])
    in_lockdown = np.array([spec.lockdown[0] <= d <= spec.lockdown[1] for d in days])
    streams = np.random.SeedSequence(seed).spawn(len(spec.populations))
    frames, labels, offset = [], {}, 0
    cat_names = np.array([c.value for c in ALL_CATEGORIES], dtype=object)
    for pop, ss in zip(spec.populations, streams):
        rng = np.random.default_rng(ss)
        n_posts = rng.integers(pop.posts_per_user[0], pop.posts_per_user[1] + 1, size=pop.size)
        user_idx = np.repeat(np.arange(pop.size), n_posts)
        total = int(n_posts.sum())
        weights = np.array([p.weight for p in pop.peaks], float)
        comp = rng.choice(len(pop.peaks), size=total, p=weights / weights.sum())
        centres = np.array([p.hour for p in pop.peaks])[comp]
        kappas = np.array([p.kappa for p in pop.peaks])[comp]
        jitter = rng.normal(0.0, pop.user_jitter_hours, size=pop.size)[user_idx] if pop.user_jitter_hours > 0 else 0.0
        hours = (centres + jitter + rng.vonmises(0.0, kappas) * 24 / (2 * np.pi)) % 24
        secs = np.minimum(np.floor(hours * 3600).astype(np.int64), 86399)
        dw = np.where(in_lockdown, pop.lockdown_activity, 1.0)
        day = rng.choice(n_days, size=total, p=dw / dw.sum())
        local_ns = day_ns[day] + secs * 1_000_000_000
        utc_ns = rule.to_utc(local_ns)
        bins = secs // 900
        p_reg = pop.propensity_by_bin()
        p_lock = pop.propensity_by_bin(pop.lockdown_disinfo)
        cum = np.where(in_lockdown[day][:, None], np.cumsum(p_lock, axis=1)[bins], np.cumsum(p_reg, axis=1)[bins])
        u = rng.random(total)
        cat = np.minimum((u[:, None] >= cum).sum(axis=1), len(ALL_CATEGORIES) - 1)
        kinds = rng.choice(len(_KINDS), size=total, p=_KIND_P)
        ids = np.array([f"u{offset + i:06d}" for i in range(pop.size)], dtype=object)
        for uid in ids:
            labels[uid] = pop.name
        offset += pop.size
        categories = cat_names[cat]
        frames.append(pd.DataFrame({
            "ts": pd.to_datetime(utc_ns, unit="ns", utc=True),
            "user": ids[user_idx],
            "kind": np.array(_KINDS, dtype=object)[kinds],
            "domain": np.char.add(np.char.lower(categories.astype(str)), ".example").astype(object),
            "category": categories,
            "lat": np.nan,
            "lon": np.nan,
        }))
    frame = _normalise_frame(pd.concat(frames, ignore_index=True))
    counters = {"rows_in": len(frame), "rejected": 0, "duplicates_dropped": 0, "out_of_span": 0}
    table = PostTable(frame=frame, span=spec.span, tz_rule="UTC", counters=counters)
    return SynthResult(table, pd.Series(labels, name="population").sort_index())


def synth_spec_from_config(data: Mapping, span=DEFAULT_SPAN) -> SynthSpec:
    """Build a spec from a config table.

    A table with ``populations`` is a full spec; otherwise the keys of
    :func:`default_spec` are accepted (``surge`` as a table of
    :class:`Surge` fields).
    """
    if "populations" in data:
        data = dict(data)
        data.setdefault("span", span)
        return SynthSpec.from_dict(data)
    kw = dict(data)
    if kw.get("surge"):
        kw["surge"] = Surge(**kw["surge"])
    for key in ("posts_per_user", "infrequent_posts"):
        if key in kw:
            kw[key] = tuple(int(v) for v in kw[key])
    kw.setdefault("span", span)
    return default_spec(**kw)
